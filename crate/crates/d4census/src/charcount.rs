//! Character sums and Dirichlet-series coefficients for quadratic pairs.
//!
//! Fix a quadratic field K and a collection Λ of allowed local classes
//! (see `localmass`).  The quadratic extensions L = K(√δ) satisfying Λ are
//! counted by a Dirichlet series Φ(s) whose n-th coefficient is the number
//! of L with Nm Δ(L/K) = n, the norm taken over the places outside S(Λ).
//! This module computes those coefficients two independent ways:
//!
//!  * by the closed formula: Φ(s) = Σ_α B(K, α) · L_α(s) - [1 is allowed],
//!    a finite sum of twisted Euler products over the square classes α of
//!    elements with even valuation outside the ramified primes and S(Λ),
//!    with B(K, α) a product of local character sums; the constant removes
//!    the trivial class when the collection admits it; and
//!  * by direct enumeration of squarefree ideals 𝔞 together with the
//!    classes δ whose ramification pattern outside S is exactly 𝔞.
//!
//! The same machinery yields the two-variable refinement that separates
//! the places of K by residue degree, its two diagonal specializations,
//! counts sorted by the Galois group of the quartic closure of L, and the
//! finite character data at each place.
//!
//! The closed formula is an unfolding over the S-class group of K and is
//! valid only when that group has odd order; the module checks the
//! hypothesis at runtime and reports `HypothesisViolated` otherwise.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use crate::arith::{factorize, is_prime, isqrt, legendre, sqrt_mod_p};
use crate::localmass::{
    dyadic_field_row, dyadic_pair_row, key_of, odd_inert_row, odd_pair_row, odd_ram_row, OddCls,
    Rat, RowData, SpecCollection, TableKey,
};
use crate::oracle;
use crate::padic::{
    inert_local_odd, q2_disc_exponent, ram_local_odd, split_local_odd, split_local_q2,
    DyadicClassifier, LocalExtType, LocalVal, Q2Class,
};
use crate::qfield::{
    class_group, generator_of_prime_product, prime_ideal_above, s_unit_square_classes,
    splitting_in_quadratic, square_class_rep, val_at_prime, BigElem, ClassGroup, FieldElement,
    PrimeIdealData, PrimeSplit, QuadIdeal, QuadraticField,
};
use crate::relquad::{element_sign, galois_type, quartic_polynomial, GaloisType};
use crate::{Error, Result};

/// Coefficients are only computed up to this bound.
const COEFF_CAP: u64 = 1_000_000;

// ---------------------------------------------------------------------------
// Public result types
// ---------------------------------------------------------------------------

/// The set S(Λ) of places where the collection imposes its conditions:
/// always 2 and ∞, plus the odd primes with a non-default rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaceSet {
    pub finite: Vec<u64>,
    pub archimedean: bool,
}

/// The characters against which α is paired at one place of K, with the
/// norm of the ramification of each character ("q-value": 1 when the
/// character is unramified).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalCharacterSet {
    /// residue characteristic; 0 for an archimedean place
    pub p: u64,
    /// index of the place over p (0 or 1)
    pub place: u8,
    pub labels: Vec<String>,
    pub q_values: Vec<u64>,
}

/// Coefficients a_1 .. a_{n_max} of a Dirichlet series (a[0] is unused).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffTable {
    pub n_max: u64,
    pub a: Vec<i64>,
}

impl CoeffTable {
    pub fn zeros(n_max: u64) -> Self {
        CoeffTable { n_max, a: vec![0; n_max as usize + 1] }
    }

    pub fn get(&self, n: u64) -> i64 {
        self.a[n as usize]
    }
}

/// Coefficients of a two-variable Dirichlet series Σ a_{m,n} m^{-s} n^{-t};
/// only the nonzero entries are stored.  The support is coprime: a_{m,n}
/// vanishes unless gcd(m, n) = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleCoeffTable {
    pub m_max: u64,
    pub n_max: u64,
    pub a: BTreeMap<(u64, u64), i64>,
}

impl DoubleCoeffTable {
    pub fn get(&self, m: u64, n: u64) -> i64 {
        *self.a.get(&(m, n)).unwrap_or(&0)
    }
}

/// The two diagonal substitutions of the two-variable series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagonalMode {
    /// t = 2s: collapse (m, n) to m²n, the norm of the relative
    /// discriminant; recovers the one-variable series.
    NormOrder,
    /// s = t: collapse (m, n) to mn, the product of the rational primes
    /// ramified in L/K outside S (the radical height).
    RadicalOrder,
}

/// Counts of extensions sorted by the Galois group of the quartic closure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GaloisCounts {
    pub v4: u64,
    pub c4: u64,
    pub d4: u64,
}

impl GaloisCounts {
    pub fn total(&self) -> u64 {
        self.v4 + self.c4 + self.d4
    }
}

// ---------------------------------------------------------------------------
// Square-class encodings and Hilbert pairings
// ---------------------------------------------------------------------------
//
// At every place the square classes of the completion form an F₂-vector
// space; each component below packs them into small integer ids so that
// multiplication of classes is xor of ids.
//
//  * odd place (2 bits):  id = v | u << 1  for the class n^u π^v, where n
//    is a unit nonresidue and π a uniformizer;
//  * dyadic rational place (3 bits): id = v | ((u8-1)/2) << 1 for the
//    class of 2^v u8 with u8 ∈ {1,3,5,7};
//  * dyadic field place (4 bits): the classifier ids of `padic`;
//  * real place (1 bit per embedding): the sign.

fn odd_cls(id: usize) -> OddCls {
    OddCls { v: id & 1 == 1, u: id & 2 == 2 }
}

fn odd_lv_id(l: LocalVal) -> usize {
    (l.val as usize & 1) | (((l.unit_symbol < 0) as usize) << 1)
}

fn q2_cls(id: usize) -> Q2Class {
    Q2Class { odd_val: id & 1 == 1, unit8: (1 + 2 * (id >> 1)) as u8 }
}

fn q2_id(c: Q2Class) -> usize {
    (c.odd_val as usize) | ((((c.unit8 - 1) / 2) as usize) << 1)
}

/// Integer representative of a rational dyadic square class.
fn q2_rep_int(id: usize) -> i128 {
    ((1 + 2 * (id >> 1)) as i128) << (id & 1)
}

/// Tame Hilbert symbol over a local field of odd residue size q = p
/// (a completion of ℚ or a ramified quadratic extension), between the
/// classes with ids t and a:  (-1)^{v_t v_a (q-1)/2} χ(n)^{u_t v_a + u_a v_t}.
fn odd_place_pair(p: u64, t: usize, a: usize) -> i32 {
    let (tv, tu) = (t & 1, (t >> 1) & 1);
    let (av, au) = (a & 1, (a >> 1) & 1);
    let eps = ((p - 1) / 2) as usize;
    let e = tv * av * eps + tu * av + au * tv;
    if e & 1 == 1 {
        -1
    } else {
        1
    }
}

/// Hilbert symbol over the unramified quadratic extension (residue size
/// p², so (q-1)/2 is even and the uniformizer pairs trivially with itself).
fn odd_inert_pair(t: usize, a: usize) -> i32 {
    let e = ((t >> 1) & 1) * (a & 1) + ((a >> 1) & 1) * (t & 1);
    if e & 1 == 1 {
        -1
    } else {
        1
    }
}

// ---------------------------------------------------------------------------
// Local components of a pair (K, Λ)
// ---------------------------------------------------------------------------

enum CompKind {
    /// real quadratic K: one bit per real embedding (sign of α)
    ArchReal,
    /// imaginary quadratic K: a single complex place, trivial classes
    ArchComplex,
    /// odd p split in K: a pair of rational square classes
    OddSplit,
    /// odd p inert in K
    OddInert,
    /// odd p ramified in K; u0 records whether the unit part of the
    /// discriminant is a nonresidue
    OddRam { u0: bool },
    /// 2 split in K: a pair of rational dyadic classes
    DyadicSplit,
    /// 2 inert or ramified in K
    DyadicField(Rc<DyadicClassifier>),
}

/// One residue characteristic's worth of local data: the packed square
/// classes, the subset allowed by the collection, and the number of places.
struct Comp {
    p: u64,
    r_places: u32,
    nbits: u32,
    /// bitset over packed ids of the classes allowed by Λ
    ok: u64,
    /// whether p (or ∞) lies in S(Λ); ramified primes outside S also get a
    /// component (their condition is the default one), but they do not
    /// count toward the character-sum bound.
    in_s: bool,
    kind: CompKind,
}

/// The table row (base, ext, gal, aut, e) of the local pair attached to a
/// packed class id, matching the rows of `enumerate_local_pairs*`.
fn comp_row(c: &Comp, id: usize) -> RowData {
    match &c.kind {
        CompKind::OddSplit => odd_pair_row(odd_cls(id & 3), odd_cls(id >> 2)),
        CompKind::OddInert => odd_inert_row(odd_cls(id)),
        CompKind::OddRam { u0 } => odd_ram_row(c.p, *u0, odd_cls(id)),
        CompKind::DyadicSplit => dyadic_pair_row(q2_cls(id & 7), q2_cls(id >> 3)),
        CompKind::DyadicField(clf) => dyadic_field_row(clf, id),
        _ => unreachable!("archimedean components have no table row"),
    }
}

fn row_key(r: &RowData) -> TableKey {
    (r.0.clone(), r.1.clone(), r.2.unwrap_or("-"), r.3, r.4)
}

/// Hilbert pairing between the packed classes t and a at this component
/// (the product over the places over p).
fn comp_pairing(c: &Comp, t: usize, a: usize) -> i32 {
    match &c.kind {
        CompKind::ArchReal => {
            if (t & a).count_ones() & 1 == 1 {
                -1
            } else {
                1
            }
        }
        CompKind::ArchComplex => 1,
        CompKind::OddSplit => {
            odd_place_pair(c.p, t & 3, a & 3) * odd_place_pair(c.p, t >> 2, a >> 2)
        }
        CompKind::OddInert => odd_inert_pair(t, a),
        CompKind::OddRam { .. } => odd_place_pair(c.p, t, a),
        CompKind::DyadicSplit => {
            crate::padic::hilbert2(q2_rep_int(t & 7), q2_rep_int(a & 7))
                * crate::padic::hilbert2(q2_rep_int(t >> 3), q2_rep_int(a >> 3))
        }
        CompKind::DyadicField(clf) => clf.hilbert_ids(t, a),
    }
}

/// Character sum W(a) = Σ_{t allowed} (t, a) over this component.
fn comp_w(c: &Comp, a: usize) -> i64 {
    let mut w = 0i64;
    for t in 0..(1u64 << c.nbits) {
        if c.ok >> t & 1 == 1 {
            w += comp_pairing(c, t as usize, a) as i64;
        }
    }
    w
}

/// Packed square-class id of α at this component.
fn comp_a_id(c: &Comp, f: QuadraticField, alpha: FieldElement) -> Result<usize> {
    Ok(match &c.kind {
        CompKind::ArchReal => {
            let s0 = (element_sign(f, alpha) < 0) as usize;
            let s1 = (element_sign(f, alpha.conj()) < 0) as usize;
            s0 | s1 << 1
        }
        CompKind::ArchComplex => 0,
        CompKind::OddSplit => {
            let (l0, l1) = split_local_odd(f, alpha, c.p)?;
            odd_lv_id(l0) | odd_lv_id(l1) << 2
        }
        CompKind::OddInert => odd_lv_id(inert_local_odd(f, alpha, c.p)?),
        CompKind::OddRam { .. } => odd_lv_id(ram_local_odd(f, alpha, c.p)?),
        CompKind::DyadicSplit => {
            let (q0, q1) = split_local_q2(f, alpha)?;
            q2_id(q0.class()) | q2_id(q1.class()) << 3
        }
        CompKind::DyadicField(clf) => clf.class_id(alpha)?,
    })
}

thread_local! {
    static CLASSIFIERS: RefCell<HashMap<i64, Rc<DyadicClassifier>>> = RefCell::new(HashMap::new());
}

fn classifier_for(f: QuadraticField) -> Result<Rc<DyadicClassifier>> {
    CLASSIFIERS.with(|cache| {
        if let Some(c) = cache.borrow().get(&f.disc) {
            return Ok(Rc::clone(c));
        }
        let c = Rc::new(DyadicClassifier::new(f)?);
        cache.borrow_mut().insert(f.disc, Rc::clone(&c));
        Ok(c)
    })
}

fn resolved_keys(lambda: &SpecCollection, p: u64) -> Result<BTreeSet<TableKey>> {
    Ok(lambda.resolve(p)?.iter().map(key_of).collect())
}

fn allowed_bits(c: &Comp, keys: &BTreeSet<TableKey>) -> u64 {
    let mut ok = 0u64;
    for id in 0..(1usize << c.nbits) {
        if keys.contains(&row_key(&comp_row(c, id))) {
            ok |= 1 << id;
        }
    }
    ok
}

/// The local components of the pair (K, Λ): the archimedean one, the
/// dyadic one, one per odd prime of S(Λ), and one per odd ramified prime
/// outside S(Λ).
fn build_comps(lambda: &SpecCollection, f: QuadraticField) -> Result<Vec<Comp>> {
    lambda.validate()?;
    let d = f.disc;
    let mut comps = Vec::new();
    if d > 0 {
        let mut ok = 0u64;
        if lambda.arch.real {
            ok |= 1; // both embeddings positive: totally real closure
        }
        if lambda.arch.complex {
            ok |= 0b1110; // any negative sign gives a complex closure
        }
        comps.push(Comp {
            p: 0,
            r_places: 2,
            nbits: 2,
            ok,
            in_s: true,
            kind: CompKind::ArchReal,
        });
    } else {
        comps.push(Comp {
            p: 0,
            r_places: 1,
            nbits: 0,
            ok: lambda.arch.complex as u64,
            in_s: true,
            kind: CompKind::ArchComplex,
        });
    }
    let keys2 = resolved_keys(lambda, 2)?;
    let mut c2 = if splitting_in_quadratic(d, 2) == PrimeSplit::Split {
        Comp { p: 2, r_places: 2, nbits: 6, ok: 0, in_s: true, kind: CompKind::DyadicSplit }
    } else {
        Comp {
            p: 2,
            r_places: 1,
            nbits: 4,
            ok: 0,
            in_s: true,
            kind: CompKind::DyadicField(classifier_for(f)?),
        }
    };
    c2.ok = allowed_bits(&c2, &keys2);
    comps.push(c2);
    let s_odd: BTreeSet<u64> = lambda.odd_s_primes()?.into_iter().collect();
    let mut odd_ps = s_odd.clone();
    for (q, _) in factorize(d.unsigned_abs()) {
        if q != 2 {
            odd_ps.insert(q);
        }
    }
    for p in odd_ps {
        let keys = resolved_keys(lambda, p)?;
        let in_s = s_odd.contains(&p);
        let mut c = match splitting_in_quadratic(d, p) {
            PrimeSplit::Split => {
                Comp { p, r_places: 2, nbits: 4, ok: 0, in_s, kind: CompKind::OddSplit }
            }
            PrimeSplit::Inert => {
                Comp { p, r_places: 1, nbits: 2, ok: 0, in_s, kind: CompKind::OddInert }
            }
            PrimeSplit::Ramified => {
                let unit = d / p as i64;
                let u0 = legendre(unit, p) == -1;
                debug_assert_ne!(legendre(unit, p), 0);
                Comp { p, r_places: 1, nbits: 2, ok: 0, in_s, kind: CompKind::OddRam { u0 } }
            }
        };
        c.ok = allowed_bits(&c, &keys);
        comps.push(c);
    }
    Ok(comps)
}

fn fiber_nonempty(comps: &[Comp]) -> bool {
    comps.iter().all(|c| c.ok != 0)
}

fn empty_fiber_error(f: QuadraticField) -> Error {
    Error::EmptyFiber(format!("no extension of disc-{} field satisfies the collection", f.disc))
}

// ---------------------------------------------------------------------------
// S(Λ) and the local character sets
// ---------------------------------------------------------------------------

/// The places S(Λ) where the collection constrains the local classes.
pub fn s_of_lambda(lambda: &SpecCollection) -> Result<PlaceSet> {
    lambda.validate()?;
    let mut finite = vec![2];
    finite.extend(lambda.odd_s_primes()?);
    finite.sort_unstable();
    Ok(PlaceSet { finite, archimedean: true })
}

const ODD_CHAR_LABELS: [&str; 4] = ["chi_1", "chi_pi", "chi_n", "chi_npi"];

/// The characters paired against α at the given place of K: the classes
/// allowed by Λ at the places over S(Λ) and over the ramified primes, and
/// the two unit characters elsewhere.
pub fn local_character_set(
    lambda: &SpecCollection,
    f: QuadraticField,
    p: u64,
    place: u8,
) -> Result<LocalCharacterSet> {
    let comps = build_comps(lambda, f)?;
    if !fiber_nonempty(&comps) {
        return Err(empty_fiber_error(f));
    }
    let bad_place = || Error::InvalidSpec(format!("no place of index {place} over {p}"));
    if let Some(c) = comps.iter().find(|c| c.p == p) {
        if place as u32 >= c.r_places {
            return Err(bad_place());
        }
        let mut labels = Vec::new();
        let mut q_values = Vec::new();
        match &c.kind {
            CompKind::ArchReal | CompKind::ArchComplex => {
                let mut seen = BTreeSet::new();
                for id in 0..(1u64 << c.nbits) {
                    if c.ok >> id & 1 == 1 {
                        seen.insert((id >> place) & 1);
                    }
                }
                for b in seen {
                    labels.push(if b == 0 { "1" } else { "sgn" }.to_string());
                    q_values.push(1);
                }
            }
            CompKind::OddSplit | CompKind::OddInert | CompKind::OddRam { .. } => {
                let fdeg = if matches!(c.kind, CompKind::OddInert) { 2 } else { 1 };
                let shift = 2 * place as u32;
                let mask = if matches!(c.kind, CompKind::OddSplit) { 3 } else { 3 };
                let mut seen = BTreeSet::new();
                for id in 0..(1u64 << c.nbits) {
                    if c.ok >> id & 1 == 1 {
                        seen.insert(((id >> shift) & mask) as usize);
                    }
                }
                for t in seen {
                    labels.push(ODD_CHAR_LABELS[t].to_string());
                    q_values.push(if t & 1 == 0 { 1 } else { p.pow(fdeg) });
                }
            }
            CompKind::DyadicSplit => {
                let shift = 3 * place as u32;
                let mut seen = BTreeSet::new();
                for id in 0..(1u64 << c.nbits) {
                    if c.ok >> id & 1 == 1 {
                        seen.insert(((id >> shift) & 7) as usize);
                    }
                }
                for t in seen {
                    labels.push(format!("chi[{}]", q2_rep_int(t)));
                    q_values.push(1 << q2_disc_exponent(q2_cls(t)));
                }
            }
            CompKind::DyadicField(clf) => {
                let fdeg = if splitting_in_quadratic(f.disc, 2) == PrimeSplit::Inert { 2 } else { 1 };
                for id in 0..(1usize << c.nbits) {
                    if c.ok >> id & 1 == 1 {
                        let rep = clf.rep(id);
                        labels.push(format!("chi[({}+{}w)/2]", rep.a, rep.b));
                        let rel = match clf.ext_type(id) {
                            LocalExtType::RamExt { rel_exp } => rel_exp,
                            _ => 0,
                        };
                        q_values.push(1u64 << (fdeg * rel));
                    }
                }
            }
        }
        return Ok(LocalCharacterSet { p, place, labels, q_values });
    }
    // Generic place: p odd, unramified, outside S(Λ).  The characters are
    // the two characters of the local unit group.
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidSpec(format!("{p} is not a place of the field")));
    }
    let fdeg = match splitting_in_quadratic(f.disc, p) {
        PrimeSplit::Split => {
            if place >= 2 {
                return Err(bad_place());
            }
            1
        }
        PrimeSplit::Inert => {
            if place >= 1 {
                return Err(bad_place());
            }
            2
        }
        PrimeSplit::Ramified => unreachable!("ramified primes have components"),
    };
    Ok(LocalCharacterSet {
        p,
        place,
        labels: vec!["chi_1".to_string(), "chi_v".to_string()],
        q_values: vec![1, p.pow(fdeg)],
    })
}

// ---------------------------------------------------------------------------
// The character-sum constant B(K, α)
// ---------------------------------------------------------------------------

/// B(K, α) = Π_v (1/2) Σ_{χ ∈ C_v} χ(α) over the places of K above S(Λ)
/// and above the ramified primes outside S(Λ); at the latter the factor is
/// the indicator of even valuation.  |B| ≤ 2^{#places over S(Λ)}.
pub fn b_constant(lambda: &SpecCollection, f: QuadraticField, alpha: FieldElement) -> Result<Rat> {
    if alpha.is_zero() {
        return Err(Error::InvalidElement("alpha must be nonzero".into()));
    }
    let comps = build_comps(lambda, f)?;
    let mut num: i128 = 1;
    let mut den: i128 = 1;
    for c in &comps {
        num *= comp_w(c, comp_a_id(c, f, alpha)?) as i128;
        den *= 1i128 << c.r_places;
    }
    let b = Rat::new(num, den);
    debug_assert!(
        {
            let s_places: u32 = comps.iter().filter(|c| c.in_s).map(|c| c.r_places).sum();
            let bound = Rat::new(1i128 << s_places, 1);
            b <= bound && -b <= bound
        },
        "character-sum product exceeds its bound"
    );
    Ok(b)
}

// ---------------------------------------------------------------------------
// The unfolding context: S-unit square classes and principalization
// ---------------------------------------------------------------------------

struct Ctx {
    f: QuadraticField,
    comps: Vec<Comp>,
    comp_off: Vec<u32>,
    /// rational primes whose places belong to the unfolding set 𝒮
    /// (S(Λ) and the ramified primes)
    excluded: BTreeSet<u64>,
    /// square classes of elements with even valuation outside 𝒮
    alphas: Vec<FieldElement>,
    /// packed class tuple of each α across the components
    alpha_keys: Vec<u64>,
    /// Π_p W_p(α), the numerator of 2^{rtot} B(α)
    nums: Vec<i64>,
    rtot: u32,
    cg: ClassGroup,
    /// ideal classes reaching the wide principal class: the identity and,
    /// for real fields, the class of (√D)
    goal: (usize, usize),
    /// prime ideals of 𝒮 usable to adjust ideal classes, with their classes
    mask_ideals: Vec<(QuadIdeal, u64)>,
    mask_classes: Vec<usize>,
    /// class multiplication table and squares
    mul: Vec<Vec<usize>>,
    sq: Vec<usize>,
    /// per class: a product of small prime ideals in that class
    class_paths: Vec<Vec<(QuadIdeal, u64)>>,
    solve_cache: RefCell<HashMap<usize, (u64, usize)>>,
    count_cache: RefCell<HashMap<u64, i64>>,
}

impl Ctx {
    fn new(lambda: &SpecCollection, f: QuadraticField) -> Result<Ctx> {
        let comps = build_comps(lambda, f)?;
        if !fiber_nonempty(&comps) {
            return Err(empty_fiber_error(f));
        }
        let mut comp_off = Vec::with_capacity(comps.len());
        let mut off = 0u32;
        for c in &comps {
            comp_off.push(off);
            off += c.nbits;
        }
        assert!(off <= 64, "packed class tuple fits a word");
        let s = s_of_lambda(lambda)?;
        let d = f.disc;
        let mut excluded: BTreeSet<u64> = s.finite.iter().copied().collect();
        for (q, _) in factorize(d.unsigned_abs()) {
            if q != 2 {
                excluded.insert(q);
            }
        }
        // Entries for the S-unit machinery: both places of each split
        // prime of 𝒮, and the single place otherwise.
        let mut entries: Vec<(u64, PrimeIdealData)> = Vec::new();
        let mut s_all: BTreeSet<u64> = excluded.clone();
        s_all.insert(2);
        for &p in &s_all {
            let data = prime_ideal_above(f, p)?;
            if let PrimeIdealData::Split(a, b) = data {
                entries.push((p, PrimeIdealData::Split(a, b)));
                entries.push((p, PrimeIdealData::Split(b, a)));
            } else {
                entries.push((p, data));
            }
        }
        let alphas = s_unit_square_classes(f, &entries)?;
        debug_assert!(alphas.len().is_power_of_two());
        let mut mask_ideals = Vec::new();
        for &(p, ref data) in &entries {
            match *data {
                PrimeIdealData::Split(a, _) => mask_ideals.push((a, p)),
                PrimeIdealData::Ramified(r) => mask_ideals.push((r, p)),
                PrimeIdealData::Inert => {}
            }
        }
        let cg = class_group(d)?;
        let h = cg.classes.len();
        let mut mul = vec![vec![0usize; h]; h];
        for i in 0..h {
            for j in 0..h {
                mul[i][j] = cg.mul(i, j);
            }
        }
        let sq: Vec<usize> = (0..h).map(|i| mul[i][i]).collect();
        let identity = cg.identity_id();
        let kappa = if d > 0 { cg.sqrt_disc_class(f) } else { identity };
        let mask_classes: Vec<usize> =
            mask_ideals.iter().map(|&(ideal, _)| cg.id_of_ideal(f, ideal)).collect();
        let class_paths = prime_paths(f, &cg, &mul)?;
        let mut ctx = Ctx {
            f,
            comps,
            comp_off,
            excluded,
            alphas,
            alpha_keys: Vec::new(),
            nums: Vec::new(),
            rtot: 0,
            cg,
            goal: (identity, kappa),
            mask_ideals,
            mask_classes,
            mul,
            sq,
            class_paths,
            solve_cache: RefCell::new(HashMap::new()),
            count_cache: RefCell::new(HashMap::new()),
        };
        ctx.rtot = ctx.comps.iter().map(|c| c.r_places).sum();
        for i in 0..ctx.alphas.len() {
            let a = ctx.alphas[i];
            let key = ctx.packed_key(a)?;
            ctx.alpha_keys.push(key);
            let mut num = 1i64;
            for (ci, c) in ctx.comps.iter().enumerate() {
                num *= comp_w(c, ctx.sub_id(key, ci));
            }
            ctx.nums.push(num);
        }
        Ok(ctx)
    }

    fn sub_id(&self, key: u64, ci: usize) -> usize {
        ((key >> self.comp_off[ci]) & ((1u64 << self.comps[ci].nbits) - 1)) as usize
    }

    fn packed_key(&self, alpha: FieldElement) -> Result<u64> {
        let mut key = 0u64;
        for (ci, c) in self.comps.iter().enumerate() {
            key |= (comp_a_id(c, self.f, alpha)? as u64) << self.comp_off[ci];
        }
        Ok(key)
    }

    fn accepts_key(&self, key: u64) -> bool {
        self.comps
            .iter()
            .enumerate()
            .all(|(ci, c)| c.ok >> self.sub_id(key, ci) & 1 == 1)
    }

    /// Number of α whose twist by the class tuple `key` is allowed.
    fn accepted_count(&self, key: u64) -> i64 {
        if let Some(&n) = self.count_cache.borrow().get(&key) {
            return n;
        }
        let n = self
            .alpha_keys
            .iter()
            .filter(|&&ak| self.accepts_key(key ^ ak))
            .count() as i64;
        self.count_cache.borrow_mut().insert(key, n);
        n
    }

    /// A subset of 𝒮-primes and a class x with c · mask · x² wide-principal.
    fn solve(&self, c: usize) -> (u64, usize) {
        if let Some(&r) = self.solve_cache.borrow().get(&c) {
            return r;
        }
        for mask in 0..(1u64 << self.mask_classes.len()) {
            let mut m = c;
            for (i, &cl) in self.mask_classes.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    m = self.mul[m][cl];
                }
            }
            for (x, &x2) in self.sq.iter().enumerate() {
                let t = self.mul[m][x2];
                if t == self.goal.0 || t == self.goal.1 {
                    self.solve_cache.borrow_mut().insert(c, (mask, x));
                    return (mask, x);
                }
            }
        }
        unreachable!("odd S-class group leaves every class solvable");
    }

    /// An element with odd valuation exactly at the given prime ideal
    /// among the places outside 𝒮, reduced to a small representative.
    fn place_generator(&self, ideal: QuadIdeal, p: u64) -> Result<FieldElement> {
        let c = self.cg.id_of_ideal(self.f, ideal);
        let (mask, x) = self.solve(c);
        let mut factors: Vec<(QuadIdeal, u64, i64)> = vec![(ideal, p, 1)];
        for (i, &(mi, mp)) in self.mask_ideals.iter().enumerate() {
            if mask >> i & 1 == 1 {
                factors.push((mi, mp, 1));
            }
        }
        for &(q, qp) in &self.class_paths[x] {
            factors.push((q, qp, 2));
        }
        let gen = generator_of_prime_product(self.f, &factors)
            .ok_or_else(|| Error::InvalidElement("expected a principal prime product".into()))?;
        let g = square_class_rep(self.f, &gen)?;
        debug_assert_eq!(val_at_prime(self.f, g, ideal, p) % 2, 1);
        Ok(g)
    }
}

/// For every ideal class, a product of small split or ramified prime
/// ideals lying in it.
fn prime_paths(
    f: QuadraticField,
    cg: &ClassGroup,
    mul: &[Vec<usize>],
) -> Result<Vec<Vec<(QuadIdeal, u64)>>> {
    let h = cg.classes.len();
    let mut paths: Vec<Option<Vec<(QuadIdeal, u64)>>> = vec![None; h];
    paths[cg.identity_id()] = Some(Vec::new());
    let mut found = 1;
    let mut gens: Vec<(usize, QuadIdeal, u64)> = Vec::new();
    let mut p = 2u64;
    while found < h {
        if p > 1000 {
            return Err(Error::InvalidElement(
                "class group not generated by small primes".into(),
            ));
        }
        if is_prime(p) {
            // only split primes: their powers stay primitive under the
            // form-composition walk, and they generate the class group
            let ideal = match prime_ideal_above(f, p)? {
                PrimeIdealData::Split(a, _) => Some(a),
                PrimeIdealData::Ramified(_) | PrimeIdealData::Inert => None,
            };
            if let Some(ideal) = ideal {
                gens.push((cg.id_of_ideal(f, ideal), ideal, p));
                // breadth-first closure over the generators found so far
                let mut changed = true;
                while changed && found < h {
                    changed = false;
                    for cls in 0..h {
                        let Some(path) = paths[cls].clone() else { continue };
                        for &(gc, gi, gp) in &gens {
                            let nxt = mul[cls][gc];
                            if paths[nxt].is_none() {
                                let mut np = path.clone();
                                np.push((gi, gp));
                                paths[nxt] = Some(np);
                                found += 1;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        p += 1;
    }
    Ok(paths.into_iter().map(|p| p.unwrap()).collect())
}

// ---------------------------------------------------------------------------
// Local symbols of α at the generic odd places
// ---------------------------------------------------------------------------

/// Unit symbols of α at the two places over a split odd p, given a square
/// root of D mod p; falls back to the exact localization when α is not a
/// unit at a place.
fn split_symbols(
    f: QuadraticField,
    alpha: FieldElement,
    p: u64,
    root: u64,
) -> Result<(i32, i32)> {
    let inv2 = ((p + 1) / 2) as u128;
    let pa = alpha.a.rem_euclid(p as i128) as u128;
    let pb = alpha.b.rem_euclid(p as i128) as u128;
    let mut out = [0i32; 2];
    for (j, r) in [root, p - root].into_iter().enumerate() {
        let resid = (pa + pb * r as u128) % p as u128 * inv2 % p as u128;
        if resid == 0 {
            // positive even valuation at a place: take the deep unit parts
            let (l0, l1) = split_local_odd(f, alpha, p)?;
            debug_assert!(l0.val % 2 == 0 && l1.val % 2 == 0);
            return Ok((l0.unit_symbol, l1.unit_symbol));
        }
        out[j] = legendre(resid as i64, p);
    }
    Ok((out[0], out[1]))
}

/// Unit symbol of α at the place over an inert odd p.
fn inert_symbol(f: QuadraticField, alpha: FieldElement, p: u64) -> Result<i32> {
    let resid = alpha.norm(f).rem_euclid(p as i128);
    if resid == 0 {
        let l = inert_local_odd(f, alpha, p)?;
        debug_assert_eq!(l.val % 2, 0);
        return Ok(l.unit_symbol);
    }
    Ok(legendre(resid as i64, p))
}

// ---------------------------------------------------------------------------
// Coefficients by the closed formula
// ---------------------------------------------------------------------------

struct PrimeInfo {
    p: u64,
    split: bool,
    root: u64,
}

fn euler_primes(f: QuadraticField, excluded: &BTreeSet<u64>, up_to: u64) -> Vec<PrimeInfo> {
    let mut out = Vec::new();
    let mut p = 3u64;
    while p <= up_to {
        if is_prime(p) && !excluded.contains(&p) {
            match splitting_in_quadratic(f.disc, p) {
                PrimeSplit::Split => {
                    let root = sqrt_mod_p(f.disc.rem_euclid(p as i64) as u64, p)
                        .expect("split primes have square roots of D");
                    out.push(PrimeInfo { p, split: true, root });
                }
                PrimeSplit::Inert => out.push(PrimeInfo { p, split: false, root: 0 }),
                PrimeSplit::Ramified => unreachable!("ramified primes are excluded"),
            }
        }
        p += 2;
    }
    out
}

fn check_coeff_range(n_max: u64) -> Result<()> {
    if n_max == 0 {
        return Err(Error::InvalidSpec("coefficient range must be nonempty".into()));
    }
    if n_max > COEFF_CAP {
        return Err(Error::BoundExceeded(format!(
            "coefficient range {n_max} exceeds {COEFF_CAP}"
        )));
    }
    Ok(())
}

/// Coefficients of Φ(s) = Σ_α B(K, α) Π_v (1 + χ_α(v) Nm(v)^{-s}) minus
/// the indicator of the trivial class being allowed, the product over the
/// places outside 𝒮.  Requires the S-class group of K to have odd order.
pub fn phi_coeffs_formula(
    lambda: &SpecCollection,
    f: QuadraticField,
    n_max: u64,
) -> Result<CoeffTable> {
    check_coeff_range(n_max)?;
    let ctx = Ctx::new(lambda, f)?;
    let primes = euler_primes(f, &ctx.excluded, n_max);
    let n = n_max as usize;
    let scale = 1i128 << ctx.rtot;
    let mut acc = vec![0i128; n + 1];
    let mut arr = vec![0i64; n + 1];
    for (i, &alpha) in ctx.alphas.iter().enumerate() {
        let num = ctx.nums[i] as i128;
        if num == 0 {
            continue;
        }
        arr.iter_mut().for_each(|x| *x = 0);
        arr[1] = 1;
        for info in &primes {
            let p = info.p as usize;
            if info.split {
                let (x1, x2) = split_symbols(f, alpha, info.p, info.root)?;
                let c1 = (x1 + x2) as i64;
                let c2 = (x1 * x2) as i64;
                for k in (1..=n / p).rev() {
                    let t = arr[k];
                    if t != 0 {
                        arr[k * p] += c1 * t;
                        if k * p * p <= n {
                            arr[k * p * p] += c2 * t;
                        }
                    }
                }
            } else if p * p <= n {
                let x = inert_symbol(f, alpha, info.p)? as i64;
                for k in (1..=n / (p * p)).rev() {
                    arr[k * p * p] += x * arr[k];
                }
            }
        }
        for k in 1..=n {
            acc[k] += num * arr[k] as i128;
        }
    }
    if ctx.accepts_key(0) {
        acc[1] -= scale; // remove the trivial class δ = 1 when it is allowed
    }
    let mut a = vec![0i64; n + 1];
    for k in 1..=n {
        assert_eq!(acc[k] % scale, 0, "character sums leave integer coefficients");
        a[k] = (acc[k] / scale) as i64;
    }
    Ok(CoeffTable { n_max, a })
}

// ---------------------------------------------------------------------------
// Coefficients by direct enumeration
// ---------------------------------------------------------------------------

struct GroupOpt {
    cost: u64,
    norm: u64,
    key: u64,
    elem: FieldElement,
}

struct Group {
    p: u64,
    opts: Vec<GroupOpt>,
}

/// Budgeted choices at each rational prime outside 𝒮: one or both places
/// over a split prime, or the place over an inert prime.  The cost is the
/// norm (norm ordering) or the rational prime (radical ordering).
fn build_groups(ctx: &Ctx, up_to: u64, radical: bool) -> Result<Vec<Group>> {
    let f = ctx.f;
    let mut groups = Vec::new();
    let mut p = 3u64;
    while p <= up_to {
        if is_prime(p) && !ctx.excluded.contains(&p) {
            match splitting_in_quadratic(f.disc, p) {
                PrimeSplit::Split => {
                    let PrimeIdealData::Split(p1, p2) = prime_ideal_above(f, p)? else {
                        unreachable!()
                    };
                    let g1 = ctx.place_generator(p1, p)?;
                    let g2 = ctx.place_generator(p2, p)?;
                    let k1 = ctx.packed_key(g1)?;
                    let k2 = ctx.packed_key(g2)?;
                    let mut opts = vec![
                        GroupOpt { cost: p, norm: p, key: k1, elem: g1 },
                        GroupOpt { cost: p, norm: p, key: k2, elem: g2 },
                    ];
                    let both_cost = if radical { p } else { p * p };
                    if both_cost <= up_to {
                        let prod = BigElem::from_field_element(g1)
                            .mul(&BigElem::from_field_element(g2), f.disc);
                        let g12 = square_class_rep(f, &prod)?;
                        opts.push(GroupOpt {
                            cost: both_cost,
                            norm: p * p,
                            key: k1 ^ k2,
                            elem: g12,
                        });
                    }
                    groups.push(Group { p, opts });
                }
                PrimeSplit::Inert => {
                    let cost = if radical { p } else { p * p };
                    if cost <= up_to {
                        let g = FieldElement::from_rational(p as i128);
                        let key = ctx.packed_key(g)?;
                        groups.push(Group {
                            p,
                            opts: vec![GroupOpt { cost, norm: p * p, key, elem: g }],
                        });
                    }
                }
                PrimeSplit::Ramified => unreachable!("ramified primes are excluded"),
            }
        }
        p += 2;
    }
    Ok(groups)
}

fn walk_counts(ctx: &Ctx, groups: &[Group], i: usize, rem: u64, norm: u64, key: u64, out: &mut [i64]) {
    out[norm as usize] += ctx.accepted_count(key);
    for (j, g) in groups.iter().enumerate().skip(i) {
        if g.p > rem {
            break;
        }
        for opt in &g.opts {
            if opt.cost <= rem {
                walk_counts(ctx, groups, j + 1, rem / opt.cost, norm * opt.norm, key ^ opt.key, out);
            }
        }
    }
}

/// Coefficients of Φ by direct enumeration: a_n is the number of
/// extensions L = K(√δ) allowed by Λ with Nm Δ(L/K) = n outside S(Λ).
pub fn phi_coeffs_enumeration(
    lambda: &SpecCollection,
    f: QuadraticField,
    n_max: u64,
) -> Result<CoeffTable> {
    check_coeff_range(n_max)?;
    let ctx = Ctx::new(lambda, f)?;
    let groups = build_groups(&ctx, n_max, false)?;
    let mut counts = vec![0i64; n_max as usize + 1];
    walk_counts(&ctx, &groups, 0, n_max, 1, 0, &mut counts);
    if ctx.accepts_key(0) {
        counts[1] -= 1; // remove the trivial class δ = 1
    }
    Ok(CoeffTable { n_max, a: counts })
}

fn bump(counts: &mut GaloisCounts, g: GaloisType) {
    match g {
        GaloisType::V4 => counts.v4 += 1,
        GaloisType::C4 => counts.c4 += 1,
        GaloisType::D4 => counts.d4 += 1,
    }
}

fn walk_galois(
    ctx: &Ctx,
    groups: &[Group],
    i: usize,
    rem: u64,
    key: u64,
    elem: FieldElement,
    at_root: bool,
    counts: &mut GaloisCounts,
) -> Result<()> {
    for (ai, &akey) in ctx.alpha_keys.iter().enumerate() {
        if !ctx.accepts_key(key ^ akey) {
            continue;
        }
        let alpha = ctx.alphas[ai];
        if at_root && alpha == FieldElement::ONE {
            continue; // δ = 1 is not an extension
        }
        let delta = elem.mul(alpha, ctx.f);
        let g = galois_type(ctx.f, delta)?;
        #[cfg(debug_assertions)]
        {
            if let Ok(poly) = quartic_polynomial(ctx.f, delta) {
                if let Ok(res) = oracle::resolvent_galois(&poly) {
                    let matches = matches!(
                        (g, res),
                        (GaloisType::V4, oracle::QuarticGroup::V4)
                            | (GaloisType::C4, oracle::QuarticGroup::C4)
                            | (GaloisType::D4, oracle::QuarticGroup::D4)
                    );
                    assert!(matches, "resolvent disagrees: {g:?} vs {res:?}");
                }
            }
        }
        bump(counts, g);
    }
    for (j, grp) in groups.iter().enumerate().skip(i) {
        if grp.p > rem {
            break;
        }
        for opt in &grp.opts {
            if opt.cost <= rem {
                let prod = BigElem::from_field_element(elem)
                    .mul(&BigElem::from_field_element(opt.elem), ctx.f.disc);
                let next = square_class_rep(ctx.f, &prod)?;
                walk_galois(ctx, groups, j + 1, rem / opt.cost, key ^ opt.key, next, false, counts)?;
            }
        }
    }
    Ok(())
}

/// Counts of the allowed extensions with radical height at most x (the
/// product of the rational primes ramified in L/K outside S(Λ)), sorted
/// by the Galois group of the quartic closure.
pub fn galois_sorted_counts(
    lambda: &SpecCollection,
    f: QuadraticField,
    x: u64,
) -> Result<GaloisCounts> {
    check_coeff_range(x)?;
    let ctx = Ctx::new(lambda, f)?;
    let groups = build_groups(&ctx, x, true)?;
    let mut counts = GaloisCounts::default();
    walk_galois(&ctx, &groups, 0, x, 0, FieldElement::ONE, true, &mut counts)?;
    Ok(counts)
}

// ---------------------------------------------------------------------------
// The two-variable refinement
// ---------------------------------------------------------------------------

/// α must generate an extension unramified at every odd place outside
/// S(Λ): even valuation everywhere the series does not track.
fn validate_double_alpha(
    f: QuadraticField,
    s_finite: &BTreeSet<u64>,
    alpha: FieldElement,
) -> Result<()> {
    if alpha.is_zero() {
        return Err(Error::InvalidAlpha("alpha must be nonzero".into()));
    }
    let nm = alpha.norm(f).unsigned_abs();
    let nm: u64 = nm
        .try_into()
        .map_err(|_| Error::BoundExceeded("norm of alpha too large to validate".into()))?;
    for (q, _) in factorize(nm) {
        if q == 2 || s_finite.contains(&q) {
            continue;
        }
        let even = match splitting_in_quadratic(f.disc, q) {
            PrimeSplit::Split => {
                let (l0, l1) = split_local_odd(f, alpha, q)?;
                l0.val % 2 == 0 && l1.val % 2 == 0
            }
            PrimeSplit::Inert => inert_local_odd(f, alpha, q)?.val % 2 == 0,
            PrimeSplit::Ramified => ram_local_odd(f, alpha, q)?.val % 2 == 0,
        };
        if !even {
            return Err(Error::InvalidAlpha(format!(
                "alpha has odd valuation over {q}, outside S"
            )));
        }
    }
    Ok(())
}

/// The Euler product of the α-twist with the places separated by residue
/// degree: split p contributes 1 + (χ_v + χ_v̄)(α) p^{-t} + (χ_v χ_v̄)(α) p^{-s},
/// inert p contributes 1 + χ_v(α) p^{-s}.  The first index of the table
/// tracks p^{-s}, the second p^{-t}.
fn double_series_map(
    f: QuadraticField,
    excluded: &BTreeSet<u64>,
    alpha: FieldElement,
    m_max: u64,
    n_max: u64,
) -> Result<BTreeMap<(u64, u64), i64>> {
    let mut map: BTreeMap<(u64, u64), i64> = BTreeMap::new();
    map.insert((1, 1), 1);
    let mut p = 3u64;
    while p <= m_max.max(n_max) {
        if is_prime(p) && !excluded.contains(&p) {
            let mut adds: Vec<((u64, u64), i64)> = Vec::new();
            match splitting_in_quadratic(f.disc, p) {
                PrimeSplit::Split => {
                    let root = sqrt_mod_p(f.disc.rem_euclid(p as i64) as u64, p).unwrap();
                    let (x1, x2) = split_symbols(f, alpha, p, root)?;
                    let c1 = (x1 + x2) as i64;
                    let c2 = (x1 * x2) as i64;
                    for (&(m, n), &v) in &map {
                        if n * p <= n_max && c1 != 0 {
                            adds.push(((m, n * p), v * c1));
                        }
                        if m * p <= m_max {
                            adds.push(((m * p, n), v * c2));
                        }
                    }
                }
                PrimeSplit::Inert => {
                    let x = inert_symbol(f, alpha, p)? as i64;
                    for (&(m, n), &v) in &map {
                        if m * p <= m_max {
                            adds.push(((m * p, n), v * x));
                        }
                    }
                }
                PrimeSplit::Ramified => unreachable!("ramified primes are excluded"),
            }
            for (k, v) in adds {
                *map.entry(k).or_insert(0) += v;
            }
        }
        p += 2;
    }
    map.retain(|_, v| *v != 0);
    Ok(map)
}

/// Two-variable coefficients of the α-twist.
pub fn double_coeffs(
    lambda: &SpecCollection,
    f: QuadraticField,
    alpha: FieldElement,
    m_max: u64,
    n_max: u64,
) -> Result<DoubleCoeffTable> {
    check_coeff_range(m_max)?;
    check_coeff_range(n_max)?;
    lambda.validate()?;
    let s = s_of_lambda(lambda)?;
    let s_finite: BTreeSet<u64> = s.finite.iter().copied().collect();
    validate_double_alpha(f, &s_finite, alpha)?;
    let mut excluded = s_finite;
    for (q, _) in factorize(f.disc.unsigned_abs()) {
        if q != 2 {
            excluded.insert(q);
        }
    }
    let a = double_series_map(f, &excluded, alpha, m_max, n_max)?;
    Ok(DoubleCoeffTable { m_max, n_max, a })
}

/// The assembled two-variable series: Σ_α B(K, α) 𝒟_α(s, t) minus the
/// indicator of the trivial class being allowed.
pub fn phi_double_coeffs(
    lambda: &SpecCollection,
    f: QuadraticField,
    m_max: u64,
    n_max: u64,
) -> Result<DoubleCoeffTable> {
    check_coeff_range(m_max)?;
    check_coeff_range(n_max)?;
    let ctx = Ctx::new(lambda, f)?;
    let scale = 1i128 << ctx.rtot;
    let mut acc: BTreeMap<(u64, u64), i128> = BTreeMap::new();
    for (i, &alpha) in ctx.alphas.iter().enumerate() {
        let num = ctx.nums[i] as i128;
        if num == 0 {
            continue;
        }
        let map = double_series_map(f, &ctx.excluded, alpha, m_max, n_max)?;
        for (k, v) in map {
            *acc.entry(k).or_insert(0) += num * v as i128;
        }
    }
    if ctx.accepts_key(0) {
        *acc.entry((1, 1)).or_insert(0) -= scale;
    }
    let mut a = BTreeMap::new();
    for (k, v) in acc {
        assert_eq!(v % scale, 0, "character sums leave integer coefficients");
        if v != 0 {
            a.insert(k, (v / scale) as i64);
        }
    }
    Ok(DoubleCoeffTable { m_max, n_max, a })
}

/// Collapse the two-variable table along a diagonal.  The norm diagonal
/// (t = 2s) sends (m, n) to m²n and must reproduce the one-variable
/// coefficients; the radical diagonal (s = t) sends (m, n) to mn.
pub fn specialize_diagonal(
    table: &DoubleCoeffTable,
    mode: DiagonalMode,
    limit: u64,
) -> Result<CoeffTable> {
    check_coeff_range(limit)?;
    let (need_m, need_n) = match mode {
        DiagonalMode::NormOrder => (isqrt(limit), limit),
        DiagonalMode::RadicalOrder => (limit, limit),
    };
    if table.m_max < need_m || table.n_max < need_n {
        return Err(Error::BoundExceeded(format!(
            "table bounds ({}, {}) too small for diagonal up to {limit}",
            table.m_max, table.n_max
        )));
    }
    let mut out = CoeffTable::zeros(limit);
    for (&(m, n), &v) in &table.a {
        let collapsed = match mode {
            DiagonalMode::NormOrder => (m as u128) * (m as u128) * (n as u128),
            DiagonalMode::RadicalOrder => (m as u128) * (n as u128),
        };
        if collapsed <= limit as u128 {
            out.a[collapsed as usize] += v;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Local factors against the quadratic L-function dictionary
// ---------------------------------------------------------------------------

/// The two-variable Euler factor at an unramified p, divided by the local
/// factors of the rational L-function of the quartic closure (trivial for
/// V4, the character of K for C4, the character of ℚ(√Nm α) for D4) and
/// of the L-function of α over K.  Returns the coefficients of p^{-s} and
/// p^{-t} of the quotient, which must both vanish.
pub fn euler_factor_defect(
    f: QuadraticField,
    alpha: FieldElement,
    p: u64,
) -> Result<(i64, i64)> {
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidFactor(format!("{p} is not an odd prime")));
    }
    if f.disc.rem_euclid(p as i64) == 0 || alpha.norm(f).rem_euclid(p as i128) == 0 {
        return Err(Error::InvalidFactor(format!("{p} divides the discriminant data")));
    }
    let gtype = galois_type(f, alpha)?;
    let x = match gtype {
        GaloisType::V4 => 1,
        GaloisType::C4 => legendre(f.disc, p),
        GaloisType::D4 => legendre(alpha.norm(f).rem_euclid(p as i128) as i64, p),
    } as i64;
    // polynomial in u = p^{-s} (degree ≤ 2) and w = p^{-t} (degree ≤ 2)
    let mut poly = [[0i64; 3]; 3];
    let mut chis: Vec<(i64, usize)> = Vec::new(); // (χ_v(α), residue degree)
    match splitting_in_quadratic(f.disc, p) {
        PrimeSplit::Split => {
            let root = sqrt_mod_p(f.disc.rem_euclid(p as i64) as u64, p).unwrap();
            let (x1, x2) = split_symbols(f, alpha, p, root)?;
            poly[0][0] = 1;
            poly[0][1] = (x1 + x2) as i64;
            poly[1][0] = (x1 * x2) as i64;
            chis.push((x1 as i64, 1));
            chis.push((x2 as i64, 1));
        }
        PrimeSplit::Inert => {
            let xv = inert_symbol(f, alpha, p)? as i64;
            poly[0][0] = 1;
            poly[1][0] = xv;
            chis.push((xv, 2));
        }
        PrimeSplit::Ramified => unreachable!(),
    }
    // multiply by (1 - x u)
    let mut next = [[0i64; 3]; 3];
    for (iu, row) in poly.iter().enumerate() {
        for (iw, &v) in row.iter().enumerate() {
            next[iu][iw] += v;
            if iu + 1 < 3 {
                next[iu + 1][iw] -= x * v;
            }
        }
    }
    poly = next;
    // multiply by (1 - χ_v(α) w^{f_v}) for each place over p
    for (chi, fdeg) in chis {
        let mut next = [[0i64; 3]; 3];
        for (iu, row) in poly.iter().enumerate() {
            for (iw, &v) in row.iter().enumerate() {
                next[iu][iw] += v;
                if iw + fdeg < 3 {
                    next[iu][iw + fdeg] -= chi * v;
                }
            }
        }
        poly = next;
    }
    Ok((poly[1][0], poly[0][1]))
}

// ---------------------------------------------------------------------------
// Standard collections for cross-checking
// ---------------------------------------------------------------------------

/// Collections exercising the three kinds of constraint: the default
/// everywhere-non-totally-ramified one, one forcing inertness at 5, and
/// one forcing total ramification at 3.
pub fn battery_collections() -> Vec<(&'static str, SpecCollection)> {
    vec![
        ("all-ntr", SpecCollection::all_ntr()),
        (
            "inert-5",
            crate::localmass::parse_spec_text("p=5 allow=2.22,2.4,2.2^2")
                .expect("battery collection parses"),
        ),
        (
            "totram-3",
            crate::localmass::parse_spec_text("p=3 allow=tr").expect("battery collection parses"),
        ),
    ]
}

// ---------------------------------------------------------------------------
