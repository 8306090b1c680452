//! The machine-checked claim suite: thirteen checks, each pinned to exact
//! expected values, lattice equalities or zero-tolerance identities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use anyhow::{anyhow, Result};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use commcalc::expand;
use commcalc::hall::{witt_count, HallBasis, HallOrder};
use commcalc::milnor::{self, DeltaMode, LinkPresentation, MuClass, MuEngine};
use commcalc::nilpotent::{ExponentVector, NilpotentContext};
use commcalc::sato_levine::{
    beta_jump, beta_tilde, invariance_condition, rat, surgery_determinant,
    three_component_special_s, CrossingRecord, HomotopyTrace, Rat,
};
use commcalc::subgroups::{
    build, engel_image_span, instantiate, InstantiationBounds, Lattice, LatticeError, LatticeOrder,
    Scheme,
};
use commcalc::words::{verify_identity, Word};

pub const DEFAULT_SEED: u64 = 0x5eed_cafe;

#[derive(Clone, Debug)]
pub struct Config {
    pub seed: u64,
    pub only: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: DEFAULT_SEED,
            only: None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Unstable,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub id: &'static str,
    pub params: &'static str,
    pub verdict: Verdict,
    /// Present for checks whose equality claims rest on instantiation
    /// bounds; `true` means the result agreed across consecutive bounds.
    pub stable: Option<bool>,
    pub seed: u64,
    pub wall_ms: u128,
    pub detail: String,
}

impl CheckRecord {
    pub fn line(&self) -> String {
        let stable = match self.stable {
            Some(true) => " [stable]",
            Some(false) => " [UNSTABLE]",
            None => "",
        };
        format!(
            "{:<28} {:>8} {:>9.3}s{}  {}",
            self.id,
            match self.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::Unstable => "unstable",
            },
            self.wall_ms as f64 / 1000.0,
            stable,
            self.detail
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub all_passed: bool,
}

struct CheckOutcome {
    pass: bool,
    stable: Option<bool>,
    detail: String,
}

impl CheckOutcome {
    fn pass(detail: impl Into<String>) -> CheckOutcome {
        CheckOutcome {
            pass: true,
            stable: None,
            detail: detail.into(),
        }
    }

    fn with_stable(mut self, stable: bool) -> CheckOutcome {
        self.stable = Some(stable);
        self
    }

    fn fail(detail: impl Into<String>) -> CheckOutcome {
        CheckOutcome {
            pass: false,
            stable: None,
            detail: detail.into(),
        }
    }
}

type CheckFn = fn(u64) -> Result<CheckOutcome>;

pub struct CheckDef {
    pub id: &'static str,
    pub params: &'static str,
    /// The wall-time budget this check commits to.
    pub budget: Duration,
    run: CheckFn,
}

pub fn checks() -> &'static [CheckDef] {
    static CHECKS: &[CheckDef] = &[
        CheckDef {
            id: "witt-orr-counts",
            params: "m=2, n=1..9",
            budget: Duration::from_secs(1),
            run: check_witt_orr,
        },
        CheckDef {
            id: "hall-stratum-f3",
            params: "m=3, weight 3",
            budget: Duration::from_secs(1),
            run: check_hall_stratum,
        },
        CheckDef {
            id: "normal-form-roundtrip",
            params: "m=2, q=6, 200 words + 200 vectors",
            budget: Duration::from_secs(30),
            run: check_normal_form_roundtrip,
        },
        CheckDef {
            id: "mu1-three-descriptions",
            params: "m=2, q=6, L=4 vs L=3",
            budget: Duration::from_secs(300),
            run: check_mu1_three_descriptions,
        },
        CheckDef {
            id: "mu1-weight5-and-survivor",
            params: "m=2, k=1, q=6",
            budget: Duration::from_secs(60),
            run: check_mu1_weight5,
        },
        CheckDef {
            id: "engel2-spans",
            params: "m=3 box 2 vs 3; m=2",
            budget: Duration::from_secs(60),
            run: check_engel2_spans,
        },
        CheckDef {
            id: "engel3-index-two",
            params: "m=2, weight-4 section",
            budget: Duration::from_secs(60),
            run: check_engel3_index,
        },
        CheckDef {
            id: "delta1-length-five",
            params: "m=2, q=6, L=4",
            budget: Duration::from_secs(300),
            run: check_delta1_length_five,
        },
        CheckDef {
            id: "identity-suite",
            params: "exact free-group identities",
            budget: Duration::from_secs(1),
            run: check_identity_suite,
        },
        CheckDef {
            id: "mu-bar-engine",
            params: "Hopf, Borromean, 20 random presentations",
            budget: Duration::from_secs(60),
            run: check_mu_bar_engine,
        },
        CheckDef {
            id: "classify-mu",
            params: "three frozen classifications",
            budget: Duration::from_secs(1),
            run: check_classify_mu,
        },
        CheckDef {
            id: "beta-suite",
            params: "jump grid + 100 random matrices",
            budget: Duration::from_secs(10),
            run: check_beta_suite,
        },
        CheckDef {
            id: "metabelian-coincidence",
            params: "m=2, q=6, L=4 vs L=3",
            budget: Duration::from_secs(600),
            run: check_metabelian_coincidence,
        },
    ];
    CHECKS
}

pub fn check_ids() -> Vec<&'static str> {
    checks().iter().map(|c| c.id).collect()
}

pub fn run(config: &Config) -> Report {
    let mut records = Vec::new();
    for def in checks() {
        if let Some(only) = &config.only {
            if def.id != only {
                continue;
            }
        }
        records.push(run_def(def, config.seed));
    }
    let all_passed = !records.is_empty() && records.iter().all(|r| r.verdict == Verdict::Pass);
    Report {
        seed: config.seed,
        checks: records,
        all_passed,
    }
}

pub fn run_check(id: &str, seed: u64) -> Option<CheckRecord> {
    checks()
        .iter()
        .find(|c| c.id == id)
        .map(|def| run_def(def, seed))
}

fn run_def(def: &CheckDef, seed: u64) -> CheckRecord {
    let start = Instant::now();
    let outcome = (def.run)(seed);
    let wall_ms = start.elapsed().as_millis();
    let (verdict, stable, detail) = match outcome {
        Ok(o) => (
            if o.pass { Verdict::Pass } else { Verdict::Fail },
            o.stable,
            o.detail,
        ),
        Err(e) => {
            // Resource-cap and stabilization aborts are inconclusive, not
            // refutations.
            let unstable = e
                .downcast_ref::<LatticeError>()
                .map(|le| {
                    matches!(
                        le,
                        LatticeError::SpanNotStabilized { .. }
                            | LatticeError::InstantiationCap(_)
                            | LatticeError::ClosureCap(_)
                    )
                })
                .unwrap_or(false);
            (
                if unstable {
                    Verdict::Unstable
                } else {
                    Verdict::Fail
                },
                None,
                format!("{:#}", e),
            )
        }
    };
    CheckRecord {
        id: def.id,
        params: def.params,
        verdict,
        stable,
        seed,
        wall_ms,
        detail,
    }
}

// Shared contexts and lattices; keys are scheme/rank/class/length strings.

struct Memo {
    ctxs: Mutex<HashMap<(usize, usize), Arc<OnceLock<Arc<NilpotentContext>>>>>,
    lattices: Mutex<HashMap<String, Arc<OnceLock<Arc<Lattice>>>>>,
}

static MEMO: Lazy<Memo> = Lazy::new(|| Memo {
    ctxs: Mutex::new(HashMap::new()),
    lattices: Mutex::new(HashMap::new()),
});

fn ctx(rank: usize, class: usize) -> Arc<NilpotentContext> {
    let slot = {
        let mut map = MEMO.ctxs.lock().unwrap();
        map.entry((rank, class)).or_default().clone()
    };
    slot.get_or_init(|| {
        Arc::new(NilpotentContext::new(rank, class, HallOrder::Standard).expect("context"))
    })
    .clone()
}

fn lattice(scheme: &Scheme, rank: usize, class: usize, len: usize) -> Result<Arc<Lattice>> {
    let key = format!("{}|m{}|q{}|L{}", scheme, rank, class, len);
    let slot = {
        let mut map = MEMO.lattices.lock().unwrap();
        map.entry(key).or_default().clone()
    };
    if let Some(found) = slot.get() {
        return Ok(found.clone());
    }
    let c = ctx(rank, class);
    let bounds = InstantiationBounds::default_for_rank(rank).with_len(len);
    let built = Arc::new(build(scheme, &c, &bounds)?);
    Ok(slot.get_or_init(|| built).clone())
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

// --- the checks -----------------------------------------------------------

fn check_witt_orr(_seed: u64) -> Result<CheckOutcome> {
    let expected = [2u64, 1, 2, 3, 6, 9, 18, 30, 56];
    for (i, &want) in expected.iter().enumerate() {
        let n = i + 1;
        let got = witt_count(2, n);
        if got != want {
            return Ok(CheckOutcome::fail(format!(
                "witt(2,{}) = {}, want {}",
                n, got, want
            )));
        }
        // Independent oracle: count aperiodic binary necklaces of length n
        // by brute force over all strings.
        let oracle = necklace_count(2, n);
        if got != oracle {
            return Ok(CheckOutcome::fail(format!(
                "witt(2,{}) = {} disagrees with necklace oracle {}",
                n, got, oracle
            )));
        }
    }
    let orr = 2 * witt_count(2, 8) - witt_count(2, 9);
    if orr != 4 {
        return Ok(CheckOutcome::fail(format!("2 N8 - N9 = {}, want 4", orr)));
    }
    if milnor::count_independent_mu(2, 9) != 4 {
        return Ok(CheckOutcome::fail(
            "count_independent_mu(2,9) != 4".to_string(),
        ));
    }
    Ok(CheckOutcome::pass(
        "witt(2,1..9) = 2,1,2,3,6,9,18,30,56; 2 N8 - N9 = 4",
    ))
}

/// Aperiodic necklaces of length `n` over `m` symbols, counted by listing
/// every string and keeping the lexicographically least rotation of the
/// aperiodic ones.
fn necklace_count(m: usize, n: usize) -> u64 {
    let total = (m as u64).pow(n as u32);
    let mut count = 0u64;
    for code in 0..total {
        let mut s = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            s.push(c % m as u64);
            c /= m as u64;
        }
        let mut least = true;
        let mut aperiodic = true;
        for r in 1..n {
            let rotated: Vec<u64> = (0..n).map(|i| s[(i + r) % n]).collect();
            if rotated < s {
                least = false;
                break;
            }
            if rotated == s {
                aperiodic = false;
            }
        }
        if least && aperiodic {
            count += 1;
        }
    }
    count
}

fn check_hall_stratum(_seed: u64) -> Result<CheckOutcome> {
    let basis = HallBasis::generate(3, 3, HallOrder::Standard)?;
    let got: std::collections::BTreeSet<String> = basis
        .stratum(3)
        .iter()
        .map(|e| basis.bracket_string(e.ordinal))
        .collect();
    let want: std::collections::BTreeSet<String> = [
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
    if got != want {
        return Ok(CheckOutcome::fail(format!("stratum mismatch: {:?}", got)));
    }
    Ok(CheckOutcome::pass(
        "weight-3 stratum of the rank-3 basis matches the known 8",
    ))
}

fn check_normal_form_roundtrip(seed: u64) -> Result<CheckOutcome> {
    let c = ctx(2, 6);
    let mut rng = StdRng::seed_from_u64(seed ^ 0x03);
    for i in 0..200 {
        let len = rng.gen_range(0..=12);
        let w = random_word(&mut rng, 2, len);
        let e = c.normal_form(&w)?;
        let back = c.evaluate(&e)?;
        if expand(&w, 6) != expand(&back, 6) {
            return Ok(CheckOutcome::fail(format!(
                "soundness failed on word #{}: {}",
                i, w
            )));
        }
    }
    for i in 0..200 {
        let mut e = ExponentVector::zero(c.basis().len());
        for elem in c.basis().elems() {
            e.set(elem.ordinal, BigInt::from(rng.gen_range(-2i64..=2)));
        }
        let w = c.evaluate(&e)?;
        if c.normal_form(&w)? != e {
            return Ok(CheckOutcome::fail(format!(
                "uniqueness failed on vector #{}",
                i
            )));
        }
    }
    Ok(CheckOutcome::pass(
        "200 words expand-sound, 200 vectors collect uniquely",
    ))
}

fn check_mu1_three_descriptions(_seed: u64) -> Result<CheckOutcome> {
    let pairs = [
        (Scheme::MuDef { k: 1 }, "definition"),
        (Scheme::MuNormalClosures { k: 1 }, "normal-closure terms"),
        (Scheme::MuBasic { k: 1 }, "basic-commutator form"),
    ];
    let mut at4 = Vec::new();
    let mut stable = true;
    for (scheme, name) in &pairs {
        let l4 = lattice(scheme, 2, 6, 4)?;
        let l3 = lattice(scheme, 2, 6, 3)?;
        if l4.compare(&l3)? != LatticeOrder::Equal {
            stable = false;
        }
        at4.push((l4, *name));
    }
    for window in at4.windows(2) {
        let order = window[0].0.compare(&window[1].0)?;
        if order != LatticeOrder::Equal {
            return Ok(CheckOutcome::fail(format!(
                "{} vs {}: {:?}",
                window[0].1, window[1].1, order
            ))
            .with_stable(stable));
        }
    }
    let out = CheckOutcome::pass(format!(
        "three descriptions agree ({} pivots)",
        at4[0].0.pivot_count()
    ));
    Ok(out.with_stable(stable))
}

fn check_mu1_weight5(_seed: u64) -> Result<CheckOutcome> {
    let c = ctx(2, 6);
    let mu1 = lattice(&Scheme::MuBasic { k: 1 }, 2, 6, 4)?;
    for e in c.basis().stratum(5) {
        let w = c.basis().as_word(e.ordinal);
        if !mu1.contains_word(&w)? {
            return Ok(CheckOutcome::fail(format!(
                "{} missing from the k=1 filtration",
                c.basis().bracket_string(e.ordinal)
            )));
        }
    }
    let survivor = Word::parse("[b,a,a,b]", 2)?;
    if mu1.contains_word(&survivor)? {
        return Ok(CheckOutcome::fail(
            "[b,a,a,b] must survive in the quotient".to_string(),
        ));
    }
    Ok(CheckOutcome::pass(
        "all six weight-5 basics contained; [b,a,a,b] survives",
    ))
}

fn check_engel2_spans(_seed: u64) -> Result<CheckOutcome> {
    // Rank 3: the span stabilizes between boxes 2 and 3, and after
    // quotienting by the three two-generator strata and the diagonal
    // direction the image has index exactly 3.
    let c3 = ctx(3, 4);
    let span = engel_image_span(&c3, 2, 2)?;
    let basis = c3.basis();
    let start = basis.stratum_range(3).start;
    let col = |s: &str| -> Result<usize> {
        basis
            .stratum(3)
            .iter()
            .find(|e| basis.bracket_string(e.ordinal) == s)
            .map(|e| e.ordinal - start)
            .ok_or_else(|| anyhow!("missing {}", s))
    };
    let i_bac = col("[[b,a],c]")?;
    let i_cab = col("[[c,a],b]")?;
    // The quotient by the two-generator strata and by the relation
    // [[b,a],c][[c,a],b] = 1 is infinite cyclic; the induced map on a row
    // is the difference of those two coordinates.
    let mut image_gcd = BigInt::zero();
    for r in 0..span.span.rows() {
        let psi = span.span.at(r, i_bac) - span.span.at(r, i_cab);
        image_gcd = num_integer::Integer::gcd(&image_gcd, &psi);
    }
    if image_gcd != BigInt::from(3) {
        return Ok(
            CheckOutcome::fail(format!("quotient image gcd = {}, want 3", image_gcd))
                .with_stable(true),
        );
    }
    // Rank 2: the span is the full weight-3 section.
    let c2 = ctx(2, 4);
    let span2 = engel_image_span(&c2, 2, 2)?;
    if span2.span.lattice_index() != Some(BigInt::one()) {
        return Ok(
            CheckOutcome::fail("rank-2 span is not the full weight-3 lattice".to_string())
                .with_stable(true),
        );
    }
    Ok(CheckOutcome::pass("rank-3 quotient image has index 3; rank-2 span full").with_stable(true))
}

fn check_engel3_index(_seed: u64) -> Result<CheckOutcome> {
    let c = ctx(2, 5);
    let span = engel_image_span(&c, 3, 2)?;
    match span.span.lattice_index() {
        Some(ix) if ix == BigInt::from(2) => {
            Ok(CheckOutcome::pass("index 2 in the weight-4 section").with_stable(true))
        }
        other => Ok(CheckOutcome::fail(format!("index {:?}, want 2", other)).with_stable(true)),
    }
}

fn check_delta1_length_five(_seed: u64) -> Result<CheckOutcome> {
    let c = ctx(2, 6);
    let l4 = lattice(&Scheme::Delta { k: 1 }, 2, 6, 4)?;
    let l3 = lattice(&Scheme::Delta { k: 1 }, 2, 6, 3)?;
    let stable = l4.compare(&l3)? == LatticeOrder::Equal;
    let target = Word::parse("[b,a,a,b,b]", 2)?;
    if !l4.contains_word(&target)? {
        return Ok(CheckOutcome::fail("[b,a,a,b,b] not reached".to_string()).with_stable(stable));
    }
    for e in c.basis().stratum(5) {
        if !l4.contains_word(&c.basis().as_word(e.ordinal))? {
            return Ok(CheckOutcome::fail(format!(
                "weight-5 basic {} not reached",
                c.basis().bracket_string(e.ordinal)
            ))
            .with_stable(stable));
        }
    }
    // Class consistency: the quotient has class exactly 4, so some weight-4
    // basic commutator must survive.
    let survivor = Word::parse("[b,a,a,b]", 2)?;
    if l4.contains_word(&survivor)? {
        return Ok(
            CheckOutcome::fail("[b,a,a,b] absorbed: class would drop below 4".to_string())
                .with_stable(stable),
        );
    }
    Ok(
        CheckOutcome::pass("[b,a,a,b,b] and the whole weight-5 stratum contained")
            .with_stable(stable),
    )
}

fn check_identity_suite(_seed: u64) -> Result<CheckOutcome> {
    let w3 = |t: &str| Word::parse(t, 3);
    let w2 = |t: &str| Word::parse(t, 2);

    // Hall-Witt, cyclic factor order.
    let hw = w3("[[a,b^-1],c]^(b) * [[b,c^-1],a]^(c) * [[c,a^-1],b]^(a)")?;
    if !hw.is_identity() {
        return Ok(CheckOutcome::fail(
            "Hall-Witt product is not trivial".to_string(),
        ));
    }

    // [[g,h],h] = [h, h^g]^[g,h] at g=a, h=b.
    let lhs = w2("[[a,b],b]")?;
    let rhs = w2("[b, b^(a)]^([a,b])")?;
    if !verify_identity(&lhs, &rhs)? {
        return Ok(CheckOutcome::fail(
            "double Engel conjugation failed".to_string(),
        ));
    }

    // [h,g,h,h] = ([g,h,h,h]^([h,[g,h]]^2 [h,g]))^-1 at g=a, h=b.
    let lhs = w2("[b,a,b,b]")?;
    let conj = w2("[b,[a,b]]^2 * [b,a]")?;
    let rhs = w2("[a,b,b,b]")?.conjugate(&conj)?.inverse();
    if !verify_identity(&lhs, &rhs)? {
        return Ok(CheckOutcome::fail(
            "swapped Engel conjugation failed".to_string(),
        ));
    }

    // [g,h,h,h] = ([h,[h,[h,g]]]^([g,h]^h))^-1 at g=a, h=b.
    let lhs = w2("[a,b,b,b]")?;
    let rhs = w2("[b,[b,[b,a]]]^([a,b]^(b))")?.inverse();
    if !verify_identity(&lhs, &rhs)? {
        return Ok(CheckOutcome::fail("triple rebracketing failed".to_string()));
    }

    // Tower rewrite for k <= 4, m = a, g = b.
    let m = Word::generator(2, 0)?;
    let g = Word::generator(2, 1)?;
    for k in 0..=4usize {
        let mut tower = g.clone();
        for _ in 0..k + 1 {
            tower = m.conjugate(&tower)?;
        }
        let lhs = m.commutator(&tower)?;
        let mut rhs = g.clone();
        for _ in 0..k + 2 {
            rhs = m.commutator(&rhs)?;
        }
        if !verify_identity(&lhs, &rhs)? {
            return Ok(CheckOutcome::fail(format!(
                "tower rewrite failed at k={}",
                k
            )));
        }
    }
    Ok(CheckOutcome::pass("five identity families hold exactly"))
}

fn check_mu_bar_engine(seed: u64) -> Result<CheckOutcome> {
    // Hopf.
    let hopf = LinkPresentation::parse("m=2 / q=5 / l1=b / l2=a")?;
    let eng = MuEngine::new(hopf, DeltaMode::Subsequences);
    let v = eng.mu(&[2, 1])?;
    if v.residue != BigInt::one() || !v.modulus.is_zero() {
        return Ok(CheckOutcome::fail(format!("Hopf linking: {:?}", v)));
    }

    // Borromean.
    let borro = LinkPresentation::parse("m=3 / q=5 / l1=[b,c] / l2=[c,a] / l3=[a,b]")?;
    let c3 = ctx(3, 5);
    let eng = MuEngine::new(borro, DeltaMode::Subsequences);
    if eng.mu(&[2, 3, 1])?.residue != BigInt::one() {
        return Ok(CheckOutcome::fail(
            "triple invariant (2,3,1) != 1".to_string(),
        ));
    }
    if eng.mu(&[3, 2, 1])?.residue != BigInt::from(-1) {
        return Ok(CheckOutcome::fail(
            "triple invariant (3,2,1) != -1".to_string(),
        ));
    }
    let cyc = eng.cyclic_symmetry(&c3, 3)?;
    if !cyc.pass || !cyc.star_pass {
        return Ok(CheckOutcome::fail(
            "cyclic symmetry or relation set failed".to_string(),
        ));
    }
    let sol = eng
        .e_from_mu(&c3, &[0, 1, 1], 1)?
        .ok_or_else(|| anyhow!("inversion unexpectedly indeterminate"))?;
    let nums = eng.longitude_numbers(&c3, 1)?;
    for (ord, v) in &sol {
        if nums.get(*ord) != v {
            return Ok(CheckOutcome::fail(
                "inversion does not round-trip".to_string(),
            ));
        }
    }

    // Hopf inversion is blocked by the nonzero modulus.
    let hopf2 = LinkPresentation::parse("m=2 / q=5 / l1=b / l2=a")?;
    let c2q5 = ctx(2, 5);
    let eng_h = MuEngine::new(hopf2, DeltaMode::Subsequences);
    if eng_h.e_from_mu(&c2q5, &[1, 1], 1)?.is_some() {
        return Ok(CheckOutcome::fail(
            "linking number 1 must block the inversion".to_string(),
        ));
    }

    // 20 random presentations with vanishing lower invariants, lengths 3
    // and 4, both ranks.
    let mut rng = StdRng::seed_from_u64(seed ^ 0x10);
    let mut tested = 0usize;
    for m in [2usize, 3] {
        let c = ctx(m, 6);
        for depth in [2usize, 3] {
            for _ in 0..5 {
                let lp = random_gamma_presentation(&mut rng, m, 6, depth);
                let eng = MuEngine::new(lp, DeltaMode::Subsequences);
                for i in 1..=m {
                    for counts in multidegrees_of_weight(m, depth) {
                        let map = eng.mu_from_e(&c, &counts, i)?;
                        for (idx, value) in map {
                            let direct = eng.mu(&idx)?;
                            if value.residue != direct.residue {
                                return Ok(CheckOutcome::fail(format!(
                                    "reconstruction mismatch at {:?}",
                                    idx
                                )));
                            }
                        }
                    }
                }
                tested += 1;
            }
        }
    }
    Ok(CheckOutcome::pass(format!(
        "Hopf/Borromean values, symmetry, inversion; {} random presentations cross-validated",
        tested
    )))
}

fn random_gamma_presentation(
    rng: &mut StdRng,
    m: usize,
    q: usize,
    depth: usize,
) -> LinkPresentation {
    let mk = |rng: &mut StdRng| {
        let mut acc = Word::identity(m);
        for _ in 0..rng.gen_range(1..=2) {
            let mut parts = vec![random_word(rng, m, 3)];
            for _ in 1..depth {
                parts.push(random_word(rng, m, 2));
            }
            acc = acc.mul(&Word::left_normed(&parts).unwrap()).unwrap();
        }
        acc
    };
    let longitudes = (0..m).map(|_| mk(rng)).collect();
    LinkPresentation::new(m, q, longitudes).unwrap()
}

fn multidegrees_of_weight(m: usize, weight: usize) -> Vec<Vec<u32>> {
    fn rec(m: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == m - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(m, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, weight as u32, &mut Vec::new(), &mut out);
    out
}

fn check_classify_mu(_seed: u64) -> Result<CheckOutcome> {
    let idx = |s: &str| -> Vec<usize> { s.bytes().map(|b| (b - b'0') as usize).collect() };
    let cases = [
        ("111112122", 3usize, MuClass::InvariantOnly),
        ("1122", 1, MuClass::Extractable),
        ("11111122", 3, MuClass::InvariantOnly),
    ];
    for (s, k, want) in cases {
        let got = milnor::classify_mu(&idx(s), k)?;
        if got != want {
            return Ok(CheckOutcome::fail(format!(
                "{} at k={}: {:?}, want {:?}",
                s, k, got, want
            )));
        }
    }
    Ok(CheckOutcome::pass("frozen classifications reproduced"))
}

fn check_beta_suite(seed: u64) -> Result<CheckOutcome> {
    // The family with jump -2 per move.
    for n in 1..=5usize {
        let rec = CrossingRecord {
            component: 0,
            first_lobe: vec![0, 2],
            second_lobe: vec![0, -1],
            smoothed_linking: 0,
            sign: 1,
        };
        let trace = HomotopyTrace::new(vec![vec![0, 1], vec![1, 0]], Rat::zero(), vec![rec; n])?;
        if beta_tilde(&trace)? != rat(-2 * n as i64) {
            return Ok(CheckOutcome::fail(format!("value at n={} is not -2n", n)));
        }
    }

    // Jump grid at s = (0,0): determinant equals -n(l-n) independent of
    // lambda.
    let s0 = [Rat::zero(), Rat::zero()];
    for n in -4i64..=5 {
        for l in -4i64..=5 {
            for lambda in [-2i64, 0, 3] {
                let rec = CrossingRecord {
                    component: 0,
                    first_lobe: vec![0, n],
                    second_lobe: vec![0, l - n],
                    smoothed_linking: lambda,
                    sign: 1,
                };
                let linking = vec![vec![0, l], vec![l, 0]];
                if beta_jump(&s0, &linking, &rec)? != rat(-n * (l - n)) {
                    return Ok(CheckOutcome::fail(format!("grid point n={} l={}", n, l)));
                }
            }
        }
    }

    // Dichotomy on 100 random integer matrices with nonzero linking.
    let mut rng = StdRng::seed_from_u64(seed ^ 0x12);
    for _ in 0..100 {
        let nz = |rng: &mut StdRng| loop {
            let v = rng.gen_range(-9i64..=9);
            if v != 0 {
                return v;
            }
        };
        let (a12, a13, a23) = (nz(&mut rng), nz(&mut rng), nz(&mut rng));
        let linking = vec![vec![0, a12, a13], vec![a12, 0, a23], vec![a13, a23, 0]];
        for positive in [true, false] {
            let s = three_component_special_s(a12, a13, a23, positive)?;
            if !invariance_condition(&s, &linking)?.iter().all(|&b| b) {
                return Ok(CheckOutcome::fail(format!(
                    "minors fail at ({},{},{}) {}",
                    a12, a13, a23, positive
                )));
            }
            let det = surgery_determinant(&s, &linking)?;
            if det.is_zero() != positive {
                return Ok(CheckOutcome::fail(format!(
                    "determinant dichotomy fails at ({},{},{})",
                    a12, a13, a23
                )));
            }
        }
    }
    Ok(CheckOutcome::pass(
        "family values, jump grid, 100-matrix dichotomy",
    ))
}

fn check_metabelian_coincidence(_seed: u64) -> Result<CheckOutcome> {
    let mut stable = true;
    let mut joined: Vec<Arc<Lattice>> = Vec::new();
    for len in [3usize, 4] {
        let mu = lattice(&Scheme::MuDef { k: 1 }, 2, 6, len)?;
        let delta = lattice(&Scheme::Delta { k: 1 }, 2, 6, len)?;
        let dd = lattice(&Scheme::DerivedSecond, 2, 6, len)?;
        let left = Arc::new(mu.join(&dd)?);
        let right = Arc::new(delta.join(&dd)?);
        if left.compare(&right)? != LatticeOrder::Equal {
            return Ok(CheckOutcome::fail(format!(
                "images differ in the metabelianization at L={}",
                len
            ))
            .with_stable(false));
        }
        joined.push(left);
    }
    if joined[0].compare(&joined[1])? != LatticeOrder::Equal {
        stable = false;
    }
    Ok(CheckOutcome::pass(
        "meridian filtration and Engel filtration agree modulo the second derived subgroup",
    )
    .with_stable(stable))
}

// Re-exported helpers for the command-line front end.

pub fn presentation_from_file(path: &std::path::Path) -> Result<LinkPresentation> {
    let text = std::fs::read_to_string(path)?;
    LinkPresentation::parse(&text).map_err(|e| anyhow!("{}", e))
}

pub fn trace_from_file(path: &std::path::Path) -> Result<HomotopyTrace> {
    let text = std::fs::read_to_string(path)?;
    HomotopyTrace::parse(&text).map_err(|e| anyhow!("{}", e))
}

pub fn scheme_from_str(text: &str) -> Result<Scheme> {
    Scheme::parse(text).ok_or_else(|| anyhow!("unknown scheme `{}`", text))
}

pub fn instantiation_preview(
    scheme: &Scheme,
    rank: usize,
    class: usize,
    len: usize,
    limit: usize,
) -> Result<(usize, Vec<Word>)> {
    let c = ctx(rank, class);
    let bounds = InstantiationBounds::default_for_rank(rank).with_len(len);
    let gens = instantiate(scheme, &c, &bounds)?;
    let total = gens.len();
    let head = gens.into_iter().take(limit).collect();
    Ok((total, head))
}

pub fn shared_ctx(rank: usize, class: usize) -> Arc<NilpotentContext> {
    ctx(rank, class)
}

pub fn shared_lattice(
    scheme: &Scheme,
    rank: usize,
    class: usize,
    len: usize,
) -> Result<Arc<Lattice>> {
    lattice(scheme, rank, class, len)
}
