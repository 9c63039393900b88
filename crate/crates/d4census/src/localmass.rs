//! Local classification of quadratic pairs (L_v, K_v) over ℚ_p: the table
//! of isomorphism classes with automorphism orders and octic discriminant
//! exponents, exact local masses in the ring ℚ + ℚ·p^{-1/2}, the bijection
//! with D4 representation types, and the spec-collection grammar selecting
//! subsets of local classes per place.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;

use crate::arith::{is_prime, val2_i64};
use crate::padic::{
    q2_disc_exponent, q2_quad_algebra, DyadicClassifier, LocalExtType, Q2Class, QuadAlgebra2,
};
use crate::qfield::{splitting_in_quadratic, FieldElement, PrimeSplit, QuadraticField};
use crate::relquad::{
    base_symbol_label, relative_discriminant, splitting_type, PlaceAlg, QuarticSymbol,
};
use crate::{Error, Result};

pub type Rat = Ratio<i128>;

fn rat(n: i128, d: i128) -> Rat {
    Ratio::new(n, d)
}

// ---------------------------------------------------------------------------
// Exact masses: a + b * p^{-1/2}
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MassValue {
    /// rational part
    pub rat: Rat,
    /// coefficient of p^{-1/2}
    pub irr: Rat,
}

impl MassValue {
    pub const fn zero() -> Self {
        MassValue { rat: Ratio::new_raw(0, 1), irr: Ratio::new_raw(0, 1) }
    }

    pub fn rational(r: Rat) -> Self {
        MassValue { rat: r, irr: rat(0, 1) }
    }

    pub fn new(r: Rat, i: Rat) -> Self {
        MassValue { rat: r, irr: i }
    }

    pub fn add(self, o: Self) -> Self {
        MassValue { rat: self.rat + o.rat, irr: self.irr + o.irr }
    }

    /// Product in ℚ + ℚ x with x² = 1/p.
    pub fn mul(self, o: Self, p: u64) -> Self {
        let pinv = rat(1, p as i128);
        MassValue {
            rat: self.rat * o.rat + self.irr * o.irr * pinv,
            irr: self.rat * o.irr + self.irr * o.rat,
        }
    }

    pub fn scale(self, r: Rat) -> Self {
        MassValue { rat: self.rat * r, irr: self.irr * r }
    }

    pub fn to_f64(self, p: u64) -> f64 {
        let f = |x: Rat| *x.numer() as f64 / *x.denom() as f64;
        f(self.rat) + f(self.irr) / (p as f64).sqrt()
    }
}

// ---------------------------------------------------------------------------
// Local pair classes
// ---------------------------------------------------------------------------

/// One row of the local classification at a finite prime: an isomorphism
/// class (or a batch of `multiplicity` classes sharing all visible data)
/// of pairs (L ⊗ ℚ_p, K ⊗ ℚ_p).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalEtalePairClass {
    pub p: u64,
    /// splitting shape of K at p ("11", "2", "1^2", "1^2_2", "1^2_3")
    pub base: String,
    /// splitting shape of L at p
    pub ext: String,
    /// Galois group of the quartic closure when L_p is a field
    pub gal: Option<&'static str>,
    pub aut_order: u32,
    /// valuation of the octic closure discriminant
    pub disc_exp: u32,
    /// number of isomorphism classes with this data
    pub multiplicity: u32,
}

fn gal_str(gal: Option<&'static str>) -> &'static str {
    gal.unwrap_or("-")
}

fn gal_from_str(s: &str) -> Result<Option<&'static str>> {
    Ok(match s {
        "-" => None,
        "V4" | "v4" => Some("V4"),
        "C4" | "c4" => Some("C4"),
        "D4" | "d4" => Some("D4"),
        _ => return Err(Error::InvalidSpec(format!("unknown closure label {s:?}"))),
    })
}

impl LocalEtalePairClass {
    pub fn is_totally_ramified(&self) -> bool {
        self.ext == "1^4"
    }

    /// Centralizer label shown in the tables: determined by the order and
    /// the closure column.
    pub fn aut_label(&self) -> &'static str {
        match self.aut_order {
            8 => "D4",
            2 => "C2",
            4 => {
                if self.gal == Some("C4") {
                    "C4"
                } else {
                    "V4"
                }
            }
            _ => unreachable!("aut order {}", self.aut_order),
        }
    }

    /// Stable label, e.g. `p3:11.1111:aut8:e0` or `p2:1^2_3.1^4:d4:aut2:e22`.
    pub fn canonical_label(&self) -> String {
        let mut s = format!("p{}:{}.{}", self.p, self.base, self.ext);
        if let Some(g) = self.gal {
            s.push(':');
            s.push_str(&g.to_lowercase());
        }
        s.push_str(&format!(":aut{}:e{}", self.aut_order, self.disc_exp));
        s
    }
}

pub type TableKey = (String, String, &'static str, u32, u32);

/// The aggregation key of a class row (everything except multiplicity).
pub fn key_of(c: &LocalEtalePairClass) -> TableKey {
    class_key(c)
}

fn class_key(c: &LocalEtalePairClass) -> TableKey {
    (c.base.clone(), c.ext.clone(), gal_str(c.gal), c.aut_order, c.disc_exp)
}

/// Multiplicity totals keyed by the visible row data.
pub fn aggregate_classes(rows: &[LocalEtalePairClass]) -> BTreeMap<TableKey, u32> {
    let mut m = BTreeMap::new();
    for c in rows {
        *m.entry(class_key(c)).or_insert(0) += c.multiplicity;
    }
    m
}

/// Human-readable differences between two aggregated tables (empty = equal).
pub fn diff_tables(
    got: &[LocalEtalePairClass],
    want: &[LocalEtalePairClass],
) -> Vec<String> {
    let (g, w) = (aggregate_classes(got), aggregate_classes(want));
    let keys: BTreeSet<&TableKey> = g.keys().chain(w.keys()).collect();
    let mut out = Vec::new();
    for k in keys {
        let (a, b) = (g.get(k).copied().unwrap_or(0), w.get(k).copied().unwrap_or(0));
        if a != b {
            out.push(format!(
                "row ({}),({}) gal {} aut {} e{}: generated multiplicity {}, reference {}",
                k.0, k.1, k.2, k.3, k.4, a, b
            ));
        }
    }
    out
}

fn aggregated_rows(
    p: u64,
    raw: Vec<(String, String, Option<&'static str>, u32, u32, u32)>,
) -> Vec<LocalEtalePairClass> {
    let mut map: BTreeMap<TableKey, (Option<&'static str>, u32)> = BTreeMap::new();
    for (base, ext, gal, aut, e, mult) in raw {
        let entry = map
            .entry((base, ext, gal_str(gal), aut, e))
            .or_insert((gal, 0));
        entry.1 += mult;
    }
    map.into_iter()
        .map(|((base, ext, _, aut, e), (gal, mult))| LocalEtalePairClass {
            p,
            base,
            ext,
            gal,
            aut_order: aut,
            disc_exp: e,
            multiplicity: mult,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// The odd-prime classification, generated from square classes
// ---------------------------------------------------------------------------

/// A square class of ℚ_p* (p odd): valuation parity and whether the unit
/// part is a nonresidue.
/// A square class of ℚ_p (p odd) or of a quadratic extension of ℚ_p,
/// written as n^u · π^v with n a unit nonresidue and π a uniformizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct OddCls {
    pub(crate) v: bool,
    pub(crate) u: bool,
}

impl OddCls {
    pub(crate) const ALL: [OddCls; 4] = [
        OddCls { v: false, u: false },
        OddCls { v: false, u: true },
        OddCls { v: true, u: false },
        OddCls { v: true, u: true },
    ];

    pub(crate) fn mul(self, o: Self) -> Self {
        OddCls { v: self.v ^ o.v, u: self.u ^ o.u }
    }

    pub(crate) fn trivial(self) -> bool {
        !self.v && !self.u
    }

    /// Discriminant exponent of ℚ_p(√c) — 1 for odd valuation, else 0.
    pub(crate) fn exp(self) -> u32 {
        self.v as u32
    }
}

fn odd_alg(c: OddCls) -> PlaceAlg {
    if c.v {
        PlaceAlg::Ram { exp: 1, ident: c.u as i8 }
    } else if c.u {
        PlaceAlg::Inert
    } else {
        PlaceAlg::Split
    }
}

fn field_gal(nm: OddCls, d: OddCls) -> (&'static str, u32) {
    if nm.trivial() {
        ("V4", 4)
    } else if d.mul(nm).trivial() {
        ("C4", 4)
    } else {
        ("D4", 2)
    }
}

/// Row data shared between the table generator and the character-side
/// localization: (base, ext, gal, aut, e) without prime or multiplicity.
pub(crate) type RowData = (String, String, Option<&'static str>, u32, u32);

/// The row of a pair over split K_p = ℚ_p × ℚ_p (p odd) whose α has the
/// given square classes at the two places.
pub(crate) fn odd_pair_row(c1: OddCls, c2: OddCls) -> RowData {
    let sym = QuarticSymbol::Pair {
        first: odd_alg(c1),
        second: odd_alg(c2),
        same: c1 == c2,
    };
    let nm = c1.mul(c2);
    let e = 2 * nm.exp() + 2 * (c1.exp() + c2.exp());
    let aut = if c1 == c2 { 8 } else { 4 };
    ("11".to_string(), sym.label(), None, aut, e)
}

/// The row of a pair over the unramified quadratic extension of ℚ_p
/// (p odd) whose α lies in the class w^u · p^v; w is a unit nonresidue,
/// with Nm(w) a rational nonresidue and Nm(p) = p².
pub(crate) fn odd_inert_row(c: OddCls) -> RowData {
    let n = OddCls { v: false, u: true };
    let nm = OddCls { v: false, u: c.u };
    let ext = if c.v {
        "2^2"
    } else if c.u {
        "4"
    } else {
        "22"
    };
    let e = nm.exp() + n.mul(nm).exp() + 4 * c.v as u32;
    let (gal, aut) = if c.trivial() {
        (None, 4)
    } else {
        let (g, a) = field_gal(nm, n);
        (Some(g), a)
    };
    ("2".to_string(), ext.to_string(), gal, aut, e)
}

/// The row of a pair over a ramified quadratic extension of ℚ_p (p odd,
/// local discriminant p·u with u a nonresidue iff u0); α lies in the class
/// w^u · π^v with w a rational nonresidue and π² ~ D, so Nm(π) ~ -D.
pub(crate) fn odd_ram_row(p: u64, u0: bool, c: OddCls) -> RowData {
    let d = OddCls { v: true, u: u0 };
    let triv = OddCls { v: false, u: false };
    if c.v {
        // Nm(w^u π) = Nm(w)^u · (-D) lies in the class of -D for either u.
        let nm_pi = OddCls { v: true, u: u0 ^ (p % 4 == 3) };
        let (gal, aut) = field_gal(nm_pi, d);
        let e = 3 * d.exp() + nm_pi.exp() + d.mul(nm_pi).exp() + 2;
        ("1^2".to_string(), "1^4".to_string(), Some(gal), aut, e)
    } else if c.u {
        // the unramified quadratic extension of K_p; Nm(w) = w².
        let e = 3 * d.exp() + d.mul(triv).exp();
        ("1^2".to_string(), "2^2".to_string(), Some("V4"), 4, e)
    } else {
        ("1^2".to_string(), "1^21^2".to_string(), None, 4, 3 * d.exp() + d.exp())
    }
}

/// The full classification of pairs over ℚ_p for odd p, computed from the
/// square classes of ℚ_p and of its three quadratic extensions.
pub fn enumerate_local_pairs(p: u64) -> Result<Vec<LocalEtalePairClass>> {
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidSpec(format!("{p} is not an odd prime")));
    }
    let mut raw = Vec::new();
    // K_p = Q_p x Q_p: alpha is a pair of square classes up to swap.
    for i in 0..4 {
        for j in i..4 {
            let (base, ext, gal, aut, e) = odd_pair_row(OddCls::ALL[i], OddCls::ALL[j]);
            raw.push((base, ext, gal, aut, e, 1));
        }
    }
    // K_p the unramified quadratic field: all four classes Galois-stable.
    for c in OddCls::ALL {
        let (base, ext, gal, aut, e) = odd_inert_row(c);
        raw.push((base, ext, gal, aut, e, 1));
    }
    // K_p one of the two ramified quadratic fields.  Galois conjugation
    // sends π to -π, merging the two uniformizer classes when -1 is a
    // nonresidue (p = 3 mod 4); the unit classes are always stable.
    for u0 in [false, true] {
        for c in OddCls::ALL {
            if c.v && c.u && p % 4 == 3 {
                continue; // conjugate of the class (v, !u)
            }
            let (base, ext, gal, aut, e) = odd_ram_row(p, u0, c);
            raw.push((base, ext, gal, aut, e, 1));
        }
    }
    Ok(aggregated_rows(p, raw))
}

// ---------------------------------------------------------------------------
// The 2-adic classification, generated from completions of model fields
// ---------------------------------------------------------------------------

fn q2_alg(c: Q2Class) -> PlaceAlg {
    match q2_quad_algebra(c) {
        QuadAlgebra2::Split => PlaceAlg::Split,
        QuadAlgebra2::Unramified => PlaceAlg::Inert,
        QuadAlgebra2::Ramified { exp } => PlaceAlg::Ram { exp, ident: c.unit8 as i8 },
    }
}

/// Global quadratic fields whose completions at 2 realize the unramified
/// quadratic and all six ramified quadratic extensions of ℚ₂.
const DYADIC_MODEL_DISCS: [i64; 7] = [5, -4, -20, 8, -8, 40, -40];

/// The row of a pair over split K_2 = ℚ₂ × ℚ₂ whose α has the given
/// square classes at the two places.
pub(crate) fn dyadic_pair_row(c1: Q2Class, c2: Q2Class) -> RowData {
    let sym = QuarticSymbol::Pair { first: q2_alg(c1), second: q2_alg(c2), same: c1 == c2 };
    let nm = c1.mul(c2);
    let e = 2 * q2_disc_exponent(nm) + 2 * (q2_disc_exponent(c1) + q2_disc_exponent(c2));
    let aut = if c1 == c2 { 8 } else { 4 };
    ("11".to_string(), sym.label(), None, aut, e)
}

/// The row of a pair over a dyadic quadratic field completion, for the α
/// square class with the given classifier id.
pub(crate) fn dyadic_field_row(clf: &DyadicClassifier, id: usize) -> RowData {
    let f = clf.field;
    let d = f.disc;
    let inert = splitting_in_quadratic(d, 2) == PrimeSplit::Inert;
    let ek = if inert { 0 } else { val2_i64(d) };
    let fdeg: u32 = if inert { 2 } else { 1 };
    let base = if inert { "2".to_string() } else { format!("1^2_{ek}") };
    if id == clf.trivial_id() {
        let ext = if inert {
            "22".to_string()
        } else {
            format!("1^2_{ek}1^2_{ek}")
        };
        let e = 3 * ek + q2_disc_exponent(Q2Class::of(d as i128));
        return (base, ext, None, 4, e);
    }
    let rel = match clf.ext_type(id) {
        LocalExtType::SplitExt => unreachable!("nontrivial class with split extension"),
        LocalExtType::UnramExt => 0,
        LocalExtType::RamExt { rel_exp } => rel_exp,
    };
    let ext = match (inert, rel) {
        (true, 0) => "4",
        (true, _) => "2^2",
        (false, 0) => "2^2",
        (false, _) => "1^4",
    };
    let nm = clf.rep(id).norm(f);
    let ncls = Q2Class::of(nm);
    let dncls = Q2Class::of(d as i128 * nm);
    let (gal, aut) = if ncls.is_trivial() {
        ("V4", 4)
    } else if dncls.is_trivial() {
        ("C4", 4)
    } else {
        ("D4", 2)
    };
    let e = 3 * ek + q2_disc_exponent(ncls) + q2_disc_exponent(dncls) + 2 * fdeg * rel;
    (base, ext.to_string(), Some(gal), aut, e)
}

/// The full classification of pairs over ℚ₂, from 2-adic square classes of
/// ℚ₂ (split case) and of each quadratic extension (field cases, via the
/// square-class machinery of the model completions).
pub fn enumerate_local_pairs_2() -> Result<Vec<LocalEtalePairClass>> {
    let mut raw = Vec::new();
    // Split case: pairs of square classes of Q_2 up to swap.
    for i in 0..8 {
        for j in i..8 {
            let (base, ext, gal, aut, e) = dyadic_pair_row(Q2Class::ALL[i], Q2Class::ALL[j]);
            raw.push((base, ext, gal, aut, e, 1));
        }
    }
    // Field cases.
    for d in DYADIC_MODEL_DISCS {
        let f = QuadraticField::from_disc(d)?;
        let clf = DyadicClassifier::new(f)?;
        for id in 0..clf.class_count() {
            if clf.conj_id(id) < id {
                continue; // one representative per Galois orbit
            }
            let (base, ext, gal, aut, e) = dyadic_field_row(&clf, id);
            raw.push((base, ext, gal, aut, e, 1));
        }
    }
    Ok(aggregated_rows(2, raw))
}

// ---------------------------------------------------------------------------
// Masses
// ---------------------------------------------------------------------------

/// Σ multiplicity · p^{-e/4} / aut over the given classes, exact.
pub fn local_mass(p: u64, classes: &[LocalEtalePairClass]) -> MassValue {
    let mut m = MassValue::zero();
    for c in classes {
        let coeff = rat(c.multiplicity as i128, c.aut_order as i128);
        let term = if c.disc_exp % 4 == 0 {
            let den = (p as i128).pow(c.disc_exp / 4);
            MassValue::rational(coeff * rat(1, den))
        } else {
            assert_eq!(c.disc_exp % 4, 2, "disc exponents are even");
            let den = (p as i128).pow((c.disc_exp - 2) / 4);
            MassValue::new(rat(0, 1), coeff * rat(1, den))
        };
        m = m.add(term);
    }
    m
}

/// Σ multiplicity / aut (the mass with the discriminant weight dropped).
pub fn flat_sum(classes: &[LocalEtalePairClass]) -> Rat {
    classes
        .iter()
        .map(|c| rat(c.multiplicity as i128, c.aut_order as i128))
        .fold(rat(0, 1), |a, b| a + b)
}

/// Allowed archimedean classes: the closure is totally real or complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArchSet {
    pub real: bool,
    pub complex: bool,
}

impl ArchSet {
    pub const BOTH: ArchSet = ArchSet { real: true, complex: true };
}

/// 1/4 for the totally real class, 1/2 for the complex class, additive.
pub fn archimedean_mass(a: ArchSet) -> Result<Rat> {
    if !a.real && !a.complex {
        return Err(Error::InvalidSpec("empty archimedean class set".into()));
    }
    let mut m = rat(0, 1);
    if a.real {
        m += rat(1, 4);
    }
    if a.complex {
        m += rat(1, 2);
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// D4 representation types
// ---------------------------------------------------------------------------

/// Conjugacy class of a homomorphism to D4: image subgroup, tame inertia
/// image where defined (odd residue characteristic), discriminant exponent,
/// and the centralizer order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct D4Type {
    pub image: &'static str,
    pub inertia_image: Option<&'static str>,
    pub disc_exp: u32,
    pub centralizer_order: u32,
}

/// Subgroup labels: 1, Z = ⟨σ²⟩, T / T' = reflection pairs inside/outside
/// the Klein subgroup V = ⟨σ², τ⟩, V' = ⟨σ², στ⟩, C4, D4.
pub fn centralizer_order_of(image: &str) -> u32 {
    match image {
        "1" | "Z" => 8,
        "T" | "T'" | "V" | "V'" | "C4" => 4,
        "D4" => 2,
        _ => unreachable!("unknown subgroup label {image}"),
    }
}

enum ExtComp {
    Split,
    Inert,
    Ram(String),
}

/// Split an L-shape label into quadratic components ("11", "2", "1^2[_k]")
/// plus the distinct-pair marker, for the pair shapes; field shapes are
/// handled before calling this.
fn ext_components(ext: &str) -> (Vec<ExtComp>, bool) {
    let primed = ext.ends_with('\'');
    let body = ext.trim_end_matches('\'');
    let mut comps = Vec::new();
    let mut rest = body;
    while !rest.is_empty() {
        if let Some(tail) = rest.strip_prefix("1^2") {
            let (tok, tail) = if let Some(t2) = tail.strip_prefix('_') {
                let d = &t2[..1];
                (format!("1^2_{d}"), &t2[1..])
            } else {
                ("1^2".to_string(), tail)
            };
            comps.push(ExtComp::Ram(tok));
            rest = tail;
        } else if let Some(tail) = rest.strip_prefix("11") {
            comps.push(ExtComp::Split);
            rest = tail;
        } else if let Some(tail) = rest.strip_prefix('2') {
            comps.push(ExtComp::Inert);
            rest = tail;
        } else {
            unreachable!("bad shape label {ext}");
        }
    }
    (comps, primed)
}

fn image_label(c: &LocalEtalePairClass) -> &'static str {
    match c.gal {
        Some("D4") => "D4",
        Some("C4") => "C4",
        Some("V4") => "V'",
        Some(other) => unreachable!("closure {other}"),
        None => {
            if c.base != "11" {
                // K_p a field, alpha a local square: the image is the
                // order-2 subgroup cut out by K.
                "T'"
            } else {
                let (comps, primed) = ext_components(&c.ext);
                let rams: Vec<&String> = comps
                    .iter()
                    .filter_map(|x| if let ExtComp::Ram(t) = x { Some(t) } else { None })
                    .collect();
                match rams.len() {
                    0 => match (&comps[0], &comps[1]) {
                        (ExtComp::Split, ExtComp::Split) => "1",
                        (ExtComp::Inert, ExtComp::Inert) => "Z",
                        _ => "T",
                    },
                    1 => {
                        if comps.iter().any(|x| matches!(x, ExtComp::Inert)) {
                            "V"
                        } else {
                            "T"
                        }
                    }
                    _ => {
                        if primed || rams[0] != rams[1] {
                            "V"
                        } else {
                            "Z"
                        }
                    }
                }
            }
        }
    }
}

fn inertia_label_odd(c: &LocalEtalePairClass) -> &'static str {
    if c.ext == "1^4" {
        "C4"
    } else if c.base == "1^2" {
        "T'"
    } else if c.base == "2" {
        if c.ext == "2^2" {
            "Z"
        } else {
            "1"
        }
    } else {
        let (comps, _) = ext_components(&c.ext);
        match comps.iter().filter(|x| matches!(x, ExtComp::Ram(_))).count() {
            0 => "1",
            1 => "T",
            _ => "Z",
        }
    }
}

/// The D4-type of a local pair class.
pub fn d4_type_of(c: &LocalEtalePairClass) -> D4Type {
    let image = image_label(c);
    D4Type {
        image,
        inertia_image: if c.p == 2 { None } else { Some(inertia_label_odd(c)) },
        disc_exp: c.disc_exp,
        centralizer_order: centralizer_order_of(image),
    }
}

/// Inverse of `d4_type_of` at odd p, where tame inertia data pins the class.
pub fn class_from_d4_type(p: u64, ty: &D4Type) -> Result<LocalEtalePairClass> {
    if p == 2 {
        return Err(Error::InvalidSpec(
            "wild inertia at 2 is not classified by tame type data".into(),
        ));
    }
    let matches: Vec<LocalEtalePairClass> = enumerate_local_pairs(p)?
        .into_iter()
        .filter(|c| d4_type_of(c) == *ty)
        .collect();
    match matches.len() {
        1 => Ok(matches.into_iter().next().unwrap()),
        0 => Err(Error::InvalidSpec(format!("no class of type {ty:?} at p = {p}"))),
        _ => unreachable!("tame type data is not separating"),
    }
}

// ---------------------------------------------------------------------------
// Reference tables (golden files)
// ---------------------------------------------------------------------------

pub const ODD_TABLE_TEXT: &str = include_str!("../../../data/odd_local_table.txt");
pub const DYADIC_TABLE_TEXT: &str = include_str!("../../../data/dyadic_local_table.txt");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddGoldenRow {
    pub mult_1mod4: u32,
    pub mult_3mod4: u32,
    pub base: String,
    pub ext: String,
    pub gal: Option<&'static str>,
    pub aut_order: u32,
    pub disc_exp: u32,
}

fn check_aut_label(line: &str, label: &str, gal: Option<&'static str>, order: u32) -> Result<()> {
    let expected = LocalEtalePairClass {
        p: 3,
        base: String::new(),
        ext: String::new(),
        gal,
        aut_order: order,
        disc_exp: 0,
        multiplicity: 1,
    }
    .aut_label();
    if label != expected {
        return Err(Error::InvalidSpec(format!(
            "row {line:?}: aut label {label} does not match order {order} / closure {}",
            gal_str(gal)
        )));
    }
    Ok(())
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_golden_odd(text: &str) -> Result<Vec<OddGoldenRow>> {
    let mut out = Vec::new();
    for line in content_lines(text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 8 {
            return Err(Error::InvalidSpec(format!("bad odd table row {line:?}")));
        }
        let num = |s: &str| -> Result<u32> {
            s.parse()
                .map_err(|_| Error::InvalidSpec(format!("bad number {s:?} in {line:?}")))
        };
        let gal = gal_from_str(f[4])?;
        let aut_order = num(f[6])?;
        check_aut_label(line, f[5], gal, aut_order)?;
        out.push(OddGoldenRow {
            mult_1mod4: num(f[0])?,
            mult_3mod4: num(f[1])?,
            base: f[2].to_string(),
            ext: f[3].to_string(),
            gal,
            aut_order,
            disc_exp: num(f[7])?,
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidSpec("empty odd table".into()));
    }
    Ok(out)
}

pub fn resolve_golden_odd(rows: &[OddGoldenRow], p: u64) -> Vec<LocalEtalePairClass> {
    rows.iter()
        .filter_map(|r| {
            let mult = if p % 4 == 1 { r.mult_1mod4 } else { r.mult_3mod4 };
            (mult > 0).then(|| LocalEtalePairClass {
                p,
                base: r.base.clone(),
                ext: r.ext.clone(),
                gal: r.gal,
                aut_order: r.aut_order,
                disc_exp: r.disc_exp,
                multiplicity: mult,
            })
        })
        .collect()
}

pub fn parse_golden_dyadic(text: &str) -> Result<Vec<LocalEtalePairClass>> {
    let mut out = Vec::new();
    for line in content_lines(text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(Error::InvalidSpec(format!("bad 2-adic table row {line:?}")));
        }
        let num = |s: &str| -> Result<u32> {
            s.parse()
                .map_err(|_| Error::InvalidSpec(format!("bad number {s:?} in {line:?}")))
        };
        let gal = gal_from_str(f[3])?;
        let aut_order = num(f[5])?;
        check_aut_label(line, f[4], gal, aut_order)?;
        out.push(LocalEtalePairClass {
            p: 2,
            base: f[1].to_string(),
            ext: f[2].to_string(),
            gal,
            aut_order,
            disc_exp: num(f[6])?,
            multiplicity: num(f[0])?,
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidSpec("empty 2-adic table".into()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Spec collections: per-place allowed class sets
// ---------------------------------------------------------------------------

/// A selector for local classes: shape pair plus optional qualifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSelector {
    pub p: Option<u64>,
    pub base: String,
    pub ext: String,
    pub gal: Option<Option<&'static str>>,
    pub aut: Option<u32>,
    pub e: Option<u32>,
}

impl ClassSelector {
    /// Parse `[p{n}:]{base}.{ext}[:qualifier]*` where qualifiers are a
    /// closure label (`-`, `v4`, `c4`, `d4`), `aut{n}`, or `e{n}`, in any
    /// order.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("bad class selector {s:?}"));
        let mut segs = s.split(':').peekable();
        let mut p = None;
        if let Some(first) = segs.peek() {
            if let Some(num) = first.strip_prefix('p') {
                if let Ok(v) = num.parse::<u64>() {
                    p = Some(v);
                    segs.next();
                }
            }
        }
        let shapes = segs.next().ok_or_else(bad)?;
        let (base, ext) = shapes.split_once('.').ok_or_else(bad)?;
        if base.is_empty() || ext.is_empty() {
            return Err(bad());
        }
        let mut sel = ClassSelector {
            p,
            base: base.to_string(),
            ext: ext.to_string(),
            gal: None,
            aut: None,
            e: None,
        };
        for seg in segs {
            if let Some(n) = seg.strip_prefix("aut") {
                sel.aut = Some(n.parse().map_err(|_| bad())?);
            } else if let Some(n) = seg.strip_prefix('e') {
                sel.e = Some(n.parse().map_err(|_| bad())?);
            } else {
                sel.gal = Some(gal_from_str(seg).map_err(|_| bad())?);
            }
        }
        Ok(sel)
    }

    pub fn matches(&self, c: &LocalEtalePairClass) -> bool {
        self.p.map_or(true, |p| p == c.p)
            && self.base == c.base
            && self.ext == c.ext
            && self.gal.as_ref().map_or(true, |g| *g == c.gal)
            && self.aut.map_or(true, |a| a == c.aut_order)
            && self.e.map_or(true, |e| e == c.disc_exp)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectorTok {
    /// all classes that are not totally ramified
    Ntr,
    /// all totally ramified classes
    Tr,
    Class(ClassSelector),
}

impl SelectorTok {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ntr" => SelectorTok::Ntr,
            "tr" => SelectorTok::Tr,
            _ => SelectorTok::Class(ClassSelector::parse(s)?),
        })
    }
}

/// A collection Λ: allowed archimedean classes, explicit per-prime class
/// rules, and the default rule (everything non-totally-ramified) elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecCollection {
    pub arch: ArchSet,
    pub rules: BTreeMap<u64, Vec<SelectorTok>>,
}

impl SpecCollection {
    /// The everywhere-non-totally-ramified collection with both
    /// archimedean classes.
    pub fn all_ntr() -> Self {
        SpecCollection { arch: ArchSet::BOTH, rules: BTreeMap::new() }
    }

    pub fn with_rule(mut self, p: u64, toks: Vec<SelectorTok>) -> Self {
        self.rules.insert(p, toks);
        self
    }

    /// The allowed classes at p (default: all non-totally-ramified).
    pub fn resolve(&self, p: u64) -> Result<Vec<LocalEtalePairClass>> {
        let rows = if p == 2 {
            enumerate_local_pairs_2()?
        } else {
            enumerate_local_pairs(p)?
        };
        let default = vec![SelectorTok::Ntr];
        let toks = self.rules.get(&p).unwrap_or(&default);
        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        for tok in toks {
            match tok {
                SelectorTok::Ntr => {
                    chosen.extend(
                        rows.iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_totally_ramified())
                            .map(|(i, _)| i),
                    );
                }
                SelectorTok::Tr => {
                    chosen.extend(
                        rows.iter()
                            .enumerate()
                            .filter(|(_, c)| c.is_totally_ramified())
                            .map(|(i, _)| i),
                    );
                }
                SelectorTok::Class(sel) => {
                    if let Some(sp) = sel.p {
                        if sp != p {
                            return Err(Error::InvalidSpec(format!(
                                "selector for p = {sp} in a rule for p = {p}"
                            )));
                        }
                    }
                    let hits: Vec<usize> = rows
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| sel.matches(c))
                        .map(|(i, _)| i)
                        .collect();
                    if hits.is_empty() {
                        return Err(Error::InvalidSpec(format!(
                            "selector {sel:?} matches no class at p = {p}"
                        )));
                    }
                    chosen.extend(hits);
                }
            }
        }
        if chosen.is_empty() {
            return Err(Error::InvalidSpec(format!("empty class set at p = {p}")));
        }
        Ok(chosen.into_iter().map(|i| rows[i].clone()).collect())
    }

    /// The odd primes in S(Λ): those with an explicit rule differing from
    /// the non-totally-ramified default.  (2 and ∞ are always in S(Λ).)
    pub fn odd_s_primes(&self) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        for (&p, _) in self.rules.iter().filter(|(&p, _)| p != 2) {
            let here: BTreeSet<String> =
                self.resolve(p)?.iter().map(|c| c.canonical_label()).collect();
            let ntr: BTreeSet<String> = enumerate_local_pairs(p)?
                .iter()
                .filter(|c| !c.is_totally_ramified())
                .map(|c| c.canonical_label())
                .collect();
            if here != ntr {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        archimedean_mass(self.arch)?;
        for &p in self.rules.keys() {
            if p != 2 && (p < 3 || !is_prime(p)) {
                return Err(Error::InvalidSpec(format!("rule for non-prime {p}")));
            }
            self.resolve(p)?;
        }
        Ok(())
    }
}

/// Parse the spec-file grammar: one directive per line, `#` comments;
/// `infty allow=real,complex`; `p=N allow=<selectors>`; `default allow=ntr`.
pub fn parse_spec_text(text: &str) -> Result<SpecCollection> {
    let mut arch = None;
    let mut rules = BTreeMap::new();
    for line in content_lines(text) {
        let (head, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::InvalidSpec(format!("bad directive {line:?}")))?;
        let allow = rest
            .trim()
            .strip_prefix("allow=")
            .ok_or_else(|| Error::InvalidSpec(format!("missing allow= in {line:?}")))?;
        let toks: Vec<&str> = allow.split(',').map(str::trim).collect();
        if toks.iter().any(|t| t.is_empty()) {
            return Err(Error::InvalidSpec(format!("empty allow entry in {line:?}")));
        }
        if head == "infty" {
            let mut a = ArchSet { real: false, complex: false };
            for t in &toks {
                match *t {
                    "real" => a.real = true,
                    "complex" => a.complex = true,
                    _ => {
                        return Err(Error::InvalidSpec(format!(
                            "unknown archimedean class {t:?}"
                        )))
                    }
                }
            }
            arch = Some(a);
        } else if head == "default" {
            if toks != ["ntr"] {
                return Err(Error::InvalidSpec(
                    "the default rule must be `allow=ntr`".into(),
                ));
            }
        } else if let Some(pstr) = head.strip_prefix("p=") {
            let p: u64 = pstr
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad prime in {line:?}")))?;
            let parsed: Result<Vec<SelectorTok>> =
                toks.iter().map(|t| SelectorTok::parse(t)).collect();
            rules.insert(p, parsed?);
        } else {
            return Err(Error::InvalidSpec(format!("unknown directive {line:?}")));
        }
    }
    let lambda = SpecCollection { arch: arch.unwrap_or(ArchSet::BOTH), rules };
    lambda.validate()?;
    Ok(lambda)
}

/// The restricted mass Mass♭(Λ): archimedean mass times, for each finite
/// p ∈ S(Λ), the flat class sum weighted by (1 - 1/p)³.
pub fn mass_flat(lambda: &SpecCollection) -> Result<Rat> {
    lambda.validate()?;
    let mut m = archimedean_mass(lambda.arch)?;
    let mut s_primes = vec![2u64];
    s_primes.extend(lambda.odd_s_primes()?);
    for p in s_primes {
        let rows = lambda.resolve(p)?;
        let w = rat(1, 1) - rat(1, p as i128);
        m *= flat_sum(&rows) * w * w * w;
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Localization of global pairs
// ---------------------------------------------------------------------------

fn valp_i128(mut m: i128, p: u64) -> u32 {
    assert!(m != 0);
    let p = p as i128;
    let mut v = 0;
    while m % p == 0 {
        m /= p;
        v += 1;
    }
    v
}

fn odd_cls_of(m: i128, p: u64) -> OddCls {
    let v = valp_i128(m, p);
    let unit = m / (p as i128).pow(v);
    let sym = crate::arith::legendre((unit % p as i128).rem_euclid(p as i128) as i64, p);
    OddCls { v: v % 2 == 1, u: sym == -1 }
}

/// The local class of a global pair at p, in table form.
pub fn localized_class(
    f: QuadraticField,
    alpha: FieldElement,
    p: u64,
) -> Result<LocalEtalePairClass> {
    let base = base_symbol_label(f, p);
    let sym = splitting_type(f, alpha, p)?;
    let ext = sym.label();
    let is_field = matches!(
        sym,
        QuarticSymbol::UnramQuartic
            | QuarticSymbol::RamOverInert { .. }
            | QuarticSymbol::UnramOverRam { .. }
            | QuarticSymbol::TotRam { .. }
    );
    let nm = alpha.norm(f);
    let dnm = f.disc as i128 * nm;
    let (gal, aut) = if !is_field {
        let aut = match sym {
            QuarticSymbol::Pair { same, .. } => {
                if same {
                    8
                } else {
                    4
                }
            }
            QuarticSymbol::DoubleField { .. } => 4,
            _ => unreachable!(),
        };
        (None, aut)
    } else if p == 2 {
        if Q2Class::of(nm).is_trivial() {
            (Some("V4"), 4)
        } else if Q2Class::of(dnm).is_trivial() {
            (Some("C4"), 4)
        } else {
            (Some("D4"), 2)
        }
    } else {
        let (ncls, dcls) = (odd_cls_of(nm, p), odd_cls_of(dnm, p));
        if ncls.trivial() {
            (Some("V4"), 4)
        } else if dcls.trivial() {
            (Some("C4"), 4)
        } else {
            (Some("D4"), 2)
        }
    };
    let rel = relative_discriminant(f, alpha)?;
    let relval: u32 = rel
        .iter()
        .filter(|r| r.p == p)
        .map(|r| r.residue_degree * r.exp)
        .sum();
    let (e_k, e1, e2) = if p == 2 {
        (
            val2_i64(f.disc),
            q2_disc_exponent(Q2Class::of(nm)),
            q2_disc_exponent(Q2Class::of(dnm)),
        )
    } else {
        (
            crate::arith::valp_i64(f.disc, p),
            odd_cls_of(nm, p).exp(),
            odd_cls_of(dnm, p).exp(),
        )
    };
    Ok(LocalEtalePairClass {
        p,
        base,
        ext,
        gal,
        aut_order: aut,
        disc_exp: 3 * e_k + e1 + e2 + 2 * relval,
        multiplicity: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{d4_elements, p4_compose, tame_dihedral_classes, Perm4, P4_IDENTITY};
    use crate::qfield::is_square;

    fn odd_table(p: u64) -> Vec<LocalEtalePairClass> {
        enumerate_local_pairs(p).unwrap()
    }

    #[test]
    fn odd_generator_matches_reference_table() {
        let golden = parse_golden_odd(ODD_TABLE_TEXT).unwrap();
        assert_eq!(golden.len(), 15);
        for p in [3u64, 5, 7, 11, 13] {
            let want = resolve_golden_odd(&golden, p);
            let got = odd_table(p);
            let diff = diff_tables(&got, &want);
            assert!(diff.is_empty(), "p = {p}: {diff:#?}");
            let total: u32 = got.iter().map(|c| c.multiplicity).sum();
            assert_eq!(total, if p % 4 == 1 { 22 } else { 20 });
        }
    }

    #[test]
    fn odd_masses_have_closed_forms() {
        for p in [3u64, 5, 7, 11, 13, 17, 19] {
            let rows = odd_table(p);
            let q = p as i128;
            // all classes: 1 + 3/p + p^{-3/2}
            assert_eq!(
                local_mass(p, &rows),
                MassValue::new(rat(1, 1) + rat(3, q), rat(1, q)),
                "full mass at {p}"
            );
            // without the totally ramified classes: 1 + 3/p
            let ntr: Vec<_> =
                rows.iter().filter(|c| !c.is_totally_ramified()).cloned().collect();
            assert_eq!(
                local_mass(p, &ntr),
                MassValue::rational(rat(1, 1) + rat(3, q)),
                "ntr mass at {p}"
            );
            // unramified classes only (e = 0): 1
            let unram: Vec<_> = rows.iter().filter(|c| c.disc_exp == 0).cloned().collect();
            assert_eq!(local_mass(p, &unram), MassValue::rational(rat(1, 1)));
            // flat sums
            assert_eq!(flat_sum(&rows), rat(5, 1));
            assert_eq!(flat_sum(&ntr), rat(4, 1));
        }
    }

    fn shape_to_ef(label: &str) -> Vec<(u32, u32)> {
        let mut v = match label.trim_end_matches('\'') {
            "1111" => vec![(1, 1); 4],
            "112" => vec![(1, 1), (1, 1), (1, 2)],
            "22" => vec![(1, 2), (1, 2)],
            "1^211" => vec![(2, 1), (1, 1), (1, 1)],
            "1^22" => vec![(2, 1), (1, 2)],
            "1^21^2" => vec![(2, 1), (2, 1)],
            "4" => vec![(1, 4)],
            "2^2" => vec![(2, 2)],
            "1^4" => vec![(4, 1)],
            "11" => vec![(1, 1), (1, 1)],
            "2" => vec![(1, 2)],
            "1^2" => vec![(2, 1)],
            other => panic!("shape {other}"),
        };
        v.sort();
        v
    }

    #[test]
    fn odd_generator_matches_group_theory_oracle() {
        type Key = (Vec<(u32, u32)>, Vec<(u32, u32)>, Option<&'static str>, u32, u32);
        for p in [5u64, 3] {
            let mut mine: BTreeMap<Key, u32> = BTreeMap::new();
            for c in odd_table(p) {
                let k = (
                    shape_to_ef(&c.ext),
                    shape_to_ef(&c.base),
                    c.gal,
                    c.aut_order,
                    c.disc_exp,
                );
                *mine.entry(k).or_insert(0) += c.multiplicity;
            }
            let mut oracle: BTreeMap<Key, u32> = BTreeMap::new();
            for t in tame_dihedral_classes(p % 4) {
                let k = (
                    t.quartic_symbol.clone(),
                    t.quadratic_symbol.clone(),
                    t.closure_label,
                    t.centralizer_order,
                    t.octic_disc_exponent,
                );
                *oracle.entry(k).or_insert(0) += 1;
            }
            assert_eq!(mine, oracle, "p = {p}");
        }
    }

    #[test]
    fn dyadic_generator_structure() {
        let rows = enumerate_local_pairs_2().unwrap();
        assert_eq!(flat_sum(&rows), rat(36, 1));
        let ntr: Vec<_> = rows.iter().filter(|c| !c.is_totally_ramified()).cloned().collect();
        let tr: Vec<_> = rows.iter().filter(|c| c.is_totally_ramified()).cloned().collect();
        assert_eq!(flat_sum(&ntr), rat(15, 1));
        assert_eq!(flat_sum(&tr), rat(21, 1));
        let unram: Vec<_> = rows.iter().filter(|c| c.disc_exp == 0).cloned().collect();
        assert_eq!(local_mass(2, &unram), MassValue::rational(rat(1, 1)));
        // The honest full mass: 53/16 + 3·2^{-7/2}.
        assert_eq!(local_mass(2, &rows), MassValue::new(rat(53, 16), rat(3, 8)));
        // Classes with discriminant exponent 22 number 28.
        let e22: u32 =
            rows.iter().filter(|c| c.disc_exp == 22).map(|c| c.multiplicity).sum();
        assert_eq!(e22, 28);
    }

    #[test]
    fn dyadic_reference_diff_is_exactly_the_known_discrepancy() {
        // The generator disagrees with the printed reference in exactly one
        // family: the two ((2),(2^2)) D4 rows, whose discriminant exponents
        // come out 4 higher than printed (the reference omits the
        // discriminants of the two ramified mirror quadratics).  After
        // aggregation this shows up as one missing and one extra row.
        let got = enumerate_local_pairs_2().unwrap();
        let want = parse_golden_dyadic(DYADIC_TABLE_TEXT).unwrap();
        let diff = diff_tables(&got, &want);
        assert_eq!(
            diff,
            vec![
                "row (2),(2^2) gal D4 aut 2 e8: generated multiplicity 0, reference 2"
                    .to_string(),
                "row (2),(2^2) gal D4 aut 2 e16: generated multiplicity 2, reference 0"
                    .to_string(),
            ],
            "diff = {diff:#?}"
        );
        // Printed reference mass: 7/2 + 3·2^{-7/2}; e22 count also 28 there.
        assert_eq!(local_mass(2, &want), MassValue::new(rat(7, 2), rat(3, 8)));
        let e22: u32 =
            want.iter().filter(|c| c.disc_exp == 22).map(|c| c.multiplicity).sum();
        assert_eq!(e22, 28);
    }

    #[test]
    fn mass_value_ring() {
        let a = MassValue::new(rat(1, 2), rat(3, 1));
        let b = MassValue::new(rat(2, 1), rat(-1, 1));
        // (1/2 + 3x)(2 - x) with x² = 1/2: 1 - 3/2·? compute: rat: 1 + (3·-1)/2 = -1/2; irr: -1/2 + 6.
        assert_eq!(a.mul(b, 2), MassValue::new(rat(-1, 2), rat(11, 2)));
        assert_eq!(a.add(b), MassValue::new(rat(5, 2), rat(2, 1)));
        let m = MassValue::new(rat(1, 1) + rat(3, 5), rat(1, 5));
        assert!((m.to_f64(5) - (1.0 + 0.6 + 5f64.powf(-1.5))).abs() < 1e-12);
    }

    #[test]
    fn arch_masses() {
        assert_eq!(archimedean_mass(ArchSet { real: true, complex: false }).unwrap(), rat(1, 4));
        assert_eq!(archimedean_mass(ArchSet { real: false, complex: true }).unwrap(), rat(1, 2));
        assert_eq!(archimedean_mass(ArchSet::BOTH).unwrap(), rat(3, 4));
        assert!(archimedean_mass(ArchSet { real: false, complex: false }).is_err());
    }

    fn subgroup_of(label: &str) -> Vec<Perm4> {
        let sigma: Perm4 = [2, 3, 1, 0];
        let tau: Perm4 = [1, 0, 2, 3];
        let sigma2 = p4_compose(sigma, sigma);
        let sigma_tau = p4_compose(sigma, tau);
        let gens: Vec<Perm4> = match label {
            "1" => vec![],
            "Z" => vec![sigma2],
            "T" => vec![tau],
            "T'" => vec![sigma_tau],
            "V" => vec![sigma2, tau],
            "V'" => vec![sigma2, sigma_tau],
            "C4" => vec![sigma],
            "D4" => vec![sigma, tau],
            other => panic!("label {other}"),
        };
        // close under composition
        let mut set = vec![P4_IDENTITY];
        loop {
            let mut grew = false;
            let snapshot = set.clone();
            for a in &snapshot {
                for g in &gens {
                    let x = p4_compose(*a, *g);
                    if !set.contains(&x) {
                        set.push(x);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        set
    }

    #[test]
    fn centralizer_orders_match_subgroup_oracle() {
        let d4 = d4_elements();
        let mut checked = 0;
        let mut classes = enumerate_local_pairs_2().unwrap();
        classes.extend(odd_table(5));
        classes.extend(odd_table(3));
        for c in classes {
            let ty = d4_type_of(&c);
            let sub = subgroup_of(ty.image);
            let cent = d4
                .iter()
                .filter(|g| sub.iter().all(|h| p4_compose(**g, *h) == p4_compose(*h, **g)))
                .count() as u32;
            assert_eq!(cent, ty.centralizer_order, "image {} of {:?}", ty.image, c);
            assert_eq!(cent, c.aut_order, "aut of {c:?}");
            if let Some(inr) = ty.inertia_image {
                // tame inertia generates a subgroup of the image
                let isub = subgroup_of(inr);
                assert!(
                    isub.iter().all(|x| sub.contains(x)),
                    "inertia {inr} outside image {} for {c:?}",
                    ty.image
                );
            }
            checked += 1;
        }
        assert!(checked > 45);
    }

    #[test]
    fn d4_types_round_trip_at_odd_p() {
        for p in [3u64, 5, 7] {
            for c in odd_table(p) {
                let ty = d4_type_of(&c);
                assert_eq!(class_from_d4_type(p, &ty).unwrap(), c, "round trip at {p}");
            }
        }
        let c2 = &enumerate_local_pairs_2().unwrap()[0];
        assert!(class_from_d4_type(2, &d4_type_of(c2)).is_err());
    }

    #[test]
    fn canonical_labels_and_selectors() {
        let rows = odd_table(3);
        let trivial = rows
            .iter()
            .find(|c| c.base == "11" && c.ext == "1111")
            .unwrap();
        assert_eq!(trivial.canonical_label(), "p3:11.1111:aut8:e0");
        assert_eq!(trivial.aut_label(), "D4");
        let tr = rows.iter().find(|c| c.ext == "1^4").unwrap();
        assert_eq!(tr.canonical_label(), "p3:1^2.1^4:d4:aut2:e6");
        // full label parses and matches exactly its row
        for c in &rows {
            let sel = ClassSelector::parse(&c.canonical_label()).unwrap();
            let hits: Vec<_> = rows.iter().filter(|x| sel.matches(x)).collect();
            assert_eq!(hits, vec![c], "label {}", c.canonical_label());
        }
        // subsets of qualifiers, any order
        let sel = ClassSelector::parse("1^2.1^4").unwrap();
        assert!(sel.matches(tr));
        let sel = ClassSelector::parse("1^2.1^4:aut2:d4").unwrap();
        assert!(sel.matches(tr));
        let sel = ClassSelector::parse("11.1111:-").unwrap();
        assert!(sel.matches(trivial) && !sel.matches(tr));
        assert!(ClassSelector::parse("junk").is_err());
        assert!(ClassSelector::parse("11.1111:x9").is_err());
        // dyadic labels with subscripts and primes round-trip too
        for c in enumerate_local_pairs_2().unwrap() {
            let sel = ClassSelector::parse(&c.canonical_label()).unwrap();
            assert!(sel.matches(&c), "label {}", c.canonical_label());
        }
    }

    #[test]
    fn spec_collections_and_flat_mass() {
        let all = SpecCollection::all_ntr();
        assert_eq!(mass_flat(&all).unwrap(), rat(45, 32));
        assert!(all.odd_s_primes().unwrap().is_empty());

        let text = "\
# force total ramification at 3
infty allow=real,complex
p=3 allow=tr
default allow=ntr
";
        let lam = parse_spec_text(text).unwrap();
        assert_eq!(lam.odd_s_primes().unwrap(), vec![3]);
        let at3 = lam.resolve(3).unwrap();
        assert!(at3.iter().all(|c| c.is_totally_ramified()));
        assert_eq!(flat_sum(&at3), rat(1, 1));
        // Mass♭ = (3/4) · 15·(1/2)³ · 1·(2/3)³
        assert_eq!(
            mass_flat(&lam).unwrap(),
            rat(3, 4) * rat(15, 8) * rat(1, 1) * rat(8, 27)
        );

        let lam5 = parse_spec_text("p=5 allow=2.22,2.4,2.2^2\n").unwrap();
        assert_eq!(lam5.odd_s_primes().unwrap(), vec![5]);
        let at5 = lam5.resolve(5).unwrap();
        assert!(at5.iter().all(|c| c.base == "2"));
        assert_eq!(flat_sum(&at5), rat(1, 1));

        assert!(parse_spec_text("p=4 allow=ntr\n").is_err());
        assert!(parse_spec_text("infty allow=quaternionic\n").is_err());
        assert!(parse_spec_text("p=3 allow=11.9999\n").is_err());
        assert!(parse_spec_text("default allow=tr\n").is_err());
    }

    #[test]
    fn localized_classes_appear_in_the_tables() {
        let fields = [17i64, 5, -4, 8, -20, 12, -3, 40];
        let coords = [(1, 1), (2, 1), (3, 1), (1, 2), (0, 1), (5, 2), (3, 2)];
        let mut checked = 0;
        for d in fields {
            let f = QuadraticField::from_disc(d).unwrap();
            for (x, y) in coords {
                let alpha = FieldElement::from_integers(x, y);
                if alpha.norm(f) == 0 || is_square(f, alpha).is_some() {
                    continue;
                }
                for p in [2u64, 3, 5, 7] {
                    let lc = localized_class(f, alpha, p).unwrap();
                    let table = if p == 2 {
                        enumerate_local_pairs_2().unwrap()
                    } else {
                        enumerate_local_pairs(p).unwrap()
                    };
                    assert!(
                        table.iter().any(|c| class_key(c) == class_key(&lc)),
                        "local class {lc:?} of {alpha:?}/{d} not in table"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 150);
    }
}
