//! Quadratic extensions L = K(sqrt(alpha)) of a quadratic field K: Galois
//! type, relative and absolute discriminants, splitting symbols at each
//! rational prime, the refined multiplicative invariants built from the
//! ramification of L/K away from a finite set S, and the flip involution
//! exchanging the two quadratic subfields of the Galois closure.

use num_bigint::BigInt;

use crate::arith::{factorize, isqrt_i128, squarefree_decompose, val2_i64, valp_i64};
use crate::padic::{
    dyadic_ext_type, inert_local_odd, q2_disc_exponent, q2_quad_algebra, ram_local_odd,
    split_local_odd, split_local_q2, LocalExtType, Q2Class, QuadAlgebra2,
};
use crate::qfield::{
    fundamental_discriminant, is_square, splitting_in_quadratic, square_class_rep, BigElem,
    FieldElement, PrimeSplit, QuadraticField,
};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Galois type of the pair
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GaloisType {
    V4,
    C4,
    D4,
}

fn is_square_i128(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt_i128(n);
    r * r == n
}

/// Galois group of the closure of K(sqrt(alpha))/Q: V4 when Nm(alpha) is a
/// rational square, C4 when D * Nm(alpha) is, D4 otherwise.
pub fn galois_type(f: QuadraticField, alpha: FieldElement) -> Result<GaloisType> {
    if alpha.is_zero() {
        return Err(Error::InvalidAlpha("alpha must be nonzero".into()));
    }
    if is_square(f, alpha).is_some() {
        return Err(Error::InvalidAlpha("alpha is a square in K".into()));
    }
    let nm = alpha.norm(f);
    Ok(if is_square_i128(nm) {
        GaloisType::V4
    } else if is_square_i128(nm.checked_mul(f.disc as i128).expect("norm overflow")) {
        GaloisType::C4
    } else {
        GaloisType::D4
    })
}

// ---------------------------------------------------------------------------
// Relative discriminant of L/K
// ---------------------------------------------------------------------------

/// One place of K in the support of the relative discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelDiscPlace {
    pub p: u64,
    /// 0 for the first split place (or the unique place), 1 for the second.
    pub place: u8,
    pub residue_degree: u32,
    pub exp: u32,
}

fn odd_primes_of(n: u64) -> Vec<u64> {
    factorize(n)
        .into_iter()
        .map(|(p, _)| p)
        .filter(|&p| p != 2)
        .collect()
}

/// The relative discriminant of K(sqrt(alpha))/K as a list of prime-of-K
/// factors with positive exponent.
pub fn relative_discriminant(f: QuadraticField, alpha: FieldElement) -> Result<Vec<RelDiscPlace>> {
    if alpha.is_zero() {
        return Err(Error::InvalidAlpha("alpha must be nonzero".into()));
    }
    let nm = alpha.norm(f);
    let nm_abs: u64 = nm
        .unsigned_abs()
        .try_into()
        .map_err(|_| Error::BoundExceeded("norm too large to factor".into()))?;
    let mut out = Vec::new();
    for p in odd_primes_of(nm_abs) {
        match splitting_in_quadratic(f.disc, p) {
            PrimeSplit::Split => {
                let (l0, l1) = split_local_odd(f, alpha, p)?;
                if l0.val % 2 == 1 {
                    out.push(RelDiscPlace { p, place: 0, residue_degree: 1, exp: 1 });
                }
                if l1.val % 2 == 1 {
                    out.push(RelDiscPlace { p, place: 1, residue_degree: 1, exp: 1 });
                }
            }
            PrimeSplit::Inert => {
                if inert_local_odd(f, alpha, p)?.val % 2 == 1 {
                    out.push(RelDiscPlace { p, place: 0, residue_degree: 2, exp: 1 });
                }
            }
            PrimeSplit::Ramified => {
                if ram_local_odd(f, alpha, p)?.val % 2 == 1 {
                    out.push(RelDiscPlace { p, place: 0, residue_degree: 1, exp: 1 });
                }
            }
        }
    }
    match splitting_in_quadratic(f.disc, 2) {
        PrimeSplit::Split => {
            let (c0, c1) = split_local_q2(f, alpha)?;
            for (i, c) in [c0, c1].into_iter().enumerate() {
                let e = q2_disc_exponent(c.class());
                if e > 0 {
                    out.push(RelDiscPlace { p: 2, place: i as u8, residue_degree: 1, exp: e });
                }
            }
        }
        PrimeSplit::Inert => {
            if let LocalExtType::RamExt { rel_exp } = dyadic_ext_type(f, alpha)? {
                out.push(RelDiscPlace { p: 2, place: 0, residue_degree: 2, exp: rel_exp });
            }
        }
        PrimeSplit::Ramified => {
            if let LocalExtType::RamExt { rel_exp } = dyadic_ext_type(f, alpha)? {
                out.push(RelDiscPlace { p: 2, place: 0, residue_degree: 1, exp: rel_exp });
            }
        }
    }
    out.sort_by_key(|r| (r.p, r.place));
    Ok(out)
}

/// Norm of the relative discriminant, as a positive integer.
pub fn rel_disc_norm(f: QuadraticField, alpha: FieldElement) -> Result<BigInt> {
    let mut n = BigInt::from(1);
    for r in relative_discriminant(f, alpha)? {
        n *= BigInt::from(r.p).pow(r.residue_degree * r.exp);
    }
    Ok(n)
}

fn valp_rel_norm(places: &[RelDiscPlace], p: u64) -> u32 {
    places
        .iter()
        .filter(|r| r.p == p)
        .map(|r| r.residue_degree * r.exp)
        .sum()
}

// ---------------------------------------------------------------------------
// Absolute discriminant of the quartic algebra L
// ---------------------------------------------------------------------------

/// Sign of the real number a/2 + (b/2) sqrt(D) for real D.
pub(crate) fn element_sign(f: QuadraticField, alpha: FieldElement) -> i32 {
    assert!(f.is_real() && !alpha.is_zero());
    let (a, b) = (alpha.a, alpha.b);
    if a >= 0 && b >= 0 {
        1
    } else if a <= 0 && b <= 0 {
        -1
    } else {
        let lhs = a * a;
        let rhs = b * b * f.disc as i128;
        if a > 0 {
            if lhs > rhs { 1 } else { -1 }
        } else if rhs > lhs {
            1
        } else {
            -1
        }
    }
}

/// Number of complex places of L = K(sqrt(alpha)).
pub fn complex_places(f: QuadraticField, alpha: FieldElement) -> u32 {
    if !f.is_real() {
        2
    } else {
        let s1 = element_sign(f, alpha);
        let s2 = element_sign(f, alpha.conj());
        ((s1 < 0) as u32) + ((s2 < 0) as u32)
    }
}

/// Discriminant of the quartic etale algebra K(sqrt(alpha)) over Q, with
/// sign: Delta(L) = Delta(K)^2 * Nm(d_{L/K}) up to the sign (-1)^(r2).
pub fn absolute_quartic_disc(f: QuadraticField, alpha: FieldElement) -> Result<BigInt> {
    let mag = BigInt::from(f.disc).pow(2) * rel_disc_norm(f, alpha)?;
    Ok(if complex_places(f, alpha) % 2 == 1 { -mag } else { mag })
}

/// Minimal-type polynomial t^4 - Tr(alpha) t^2 + Nm(alpha) of sqrt(alpha).
pub fn quartic_polynomial(f: QuadraticField, alpha: FieldElement) -> Result<[i64; 5]> {
    let nm = alpha.norm(f);
    let tr = alpha.trace();
    let nm: i64 = nm.try_into().map_err(|_| Error::BoundExceeded("norm too large".into()))?;
    let tr: i64 = tr.try_into().map_err(|_| Error::BoundExceeded("trace too large".into()))?;
    Ok([nm, 0, -tr, 0, 1])
}

// ---------------------------------------------------------------------------
// Splitting symbols
// ---------------------------------------------------------------------------

/// A quadratic etale algebra over Q_p, with enough identity data to tell
/// whether two ramified components are isomorphic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaceAlg {
    /// Ramified quadratic field with discriminant exponent `exp` (1 at odd
    /// p); `ident` distinguishes non-isomorphic fields of equal exponent.
    Ram { exp: u32, ident: i8 },
    /// Q_p x Q_p ("11").
    Split,
    /// The unramified quadratic field ("2").
    Inert,
}

impl PlaceAlg {
    fn label(self) -> String {
        match self {
            PlaceAlg::Split => "11".into(),
            PlaceAlg::Inert => "2".into(),
            PlaceAlg::Ram { exp: 1, .. } => "1^2".into(),
            PlaceAlg::Ram { exp, .. } => format!("1^2_{exp}"),
        }
    }
}

/// Shape of the quartic algebra L ox Q_p, relative to the shape of K at p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuarticSymbol {
    /// K_p = Q_p x Q_p: L ox Q_p is a pair of quadratic algebras.
    Pair { first: PlaceAlg, second: PlaceAlg, same: bool },
    /// K_p a field and alpha a local square: K_p x K_p.  The field's
    /// ramification exponent is `None` for the unramified quadratic.
    DoubleField { k_exp: Option<u32> },
    /// K_p unramified, L_P/K_P unramified: the quartic unramified field.
    UnramQuartic,
    /// K_p unramified, L_P/K_P ramified: e = 2, f = 2.
    RamOverInert { rel_exp: u32 },
    /// K_p ramified, L_P/K_P unramified: e = 2, f = 2.
    UnramOverRam { k_exp: u32 },
    /// K_p and L_P/K_P both ramified: e = 4.
    TotRam { k_exp: u32, rel_exp: u32 },
}

impl QuarticSymbol {
    /// Canonical label in the symbol grammar: "1111", "112", "22",
    /// "1^211", "1^21^2'", "1^2_21^2_3", "2^2", "4", "1^4", ...
    pub fn label(self) -> String {
        match self {
            QuarticSymbol::Pair { first, second, same } => {
                let mut parts = [first, second];
                parts.sort();
                let mut s = format!("{}{}", parts[0].label(), parts[1].label());
                if let (PlaceAlg::Ram { exp: e1, .. }, PlaceAlg::Ram { exp: e2, .. }) =
                    (parts[0], parts[1])
                {
                    if e1 == e2 && !same {
                        s.push('\'');
                    }
                }
                s
            }
            QuarticSymbol::DoubleField { k_exp: None } => "22".into(),
            QuarticSymbol::DoubleField { k_exp: Some(1) } => "1^21^2".into(),
            QuarticSymbol::DoubleField { k_exp: Some(e) } => format!("1^2_{e}1^2_{e}"),
            QuarticSymbol::UnramQuartic => "4".into(),
            QuarticSymbol::RamOverInert { .. } | QuarticSymbol::UnramOverRam { .. } => "2^2".into(),
            QuarticSymbol::TotRam { .. } => "1^4".into(),
        }
    }

    pub fn is_totally_ramified(self) -> bool {
        matches!(self, QuarticSymbol::TotRam { .. })
    }
}

/// Label of the shape of K at p: "11", "2", "1^2", "1^2_2", "1^2_3".
pub fn base_symbol_label(f: QuadraticField, p: u64) -> String {
    match splitting_in_quadratic(f.disc, p) {
        PrimeSplit::Split => "11".into(),
        PrimeSplit::Inert => "2".into(),
        PrimeSplit::Ramified => {
            if p == 2 {
                format!("1^2_{}", val2_i64(f.disc))
            } else {
                "1^2".into()
            }
        }
    }
}

fn place_alg_odd(val: u32, unit_symbol: i32) -> PlaceAlg {
    if val % 2 == 1 {
        PlaceAlg::Ram { exp: 1, ident: unit_symbol as i8 }
    } else if unit_symbol == 1 {
        PlaceAlg::Split
    } else {
        PlaceAlg::Inert
    }
}

fn place_alg_q2(c: Q2Class) -> PlaceAlg {
    match q2_quad_algebra(c) {
        QuadAlgebra2::Split => PlaceAlg::Split,
        QuadAlgebra2::Unramified => PlaceAlg::Inert,
        QuadAlgebra2::Ramified { exp } => PlaceAlg::Ram { exp, ident: c.unit8 as i8 },
    }
}

/// Shape of K(sqrt(alpha)) ox Q_p.
pub fn splitting_type(f: QuadraticField, alpha: FieldElement, p: u64) -> Result<QuarticSymbol> {
    if alpha.is_zero() {
        return Err(Error::InvalidAlpha("alpha must be nonzero".into()));
    }
    if p == 2 {
        return Ok(match splitting_in_quadratic(f.disc, 2) {
            PrimeSplit::Split => {
                let (c0, c1) = split_local_q2(f, alpha)?;
                let (a0, a1) = (place_alg_q2(c0.class()), place_alg_q2(c1.class()));
                QuarticSymbol::Pair { first: a0, second: a1, same: a0 == a1 }
            }
            PrimeSplit::Inert => match dyadic_ext_type(f, alpha)? {
                LocalExtType::SplitExt => QuarticSymbol::DoubleField { k_exp: None },
                LocalExtType::UnramExt => QuarticSymbol::UnramQuartic,
                LocalExtType::RamExt { rel_exp } => QuarticSymbol::RamOverInert { rel_exp },
            },
            PrimeSplit::Ramified => {
                let k_exp = val2_i64(f.disc);
                match dyadic_ext_type(f, alpha)? {
                    LocalExtType::SplitExt => QuarticSymbol::DoubleField { k_exp: Some(k_exp) },
                    LocalExtType::UnramExt => QuarticSymbol::UnramOverRam { k_exp },
                    LocalExtType::RamExt { rel_exp } => QuarticSymbol::TotRam { k_exp, rel_exp },
                }
            }
        });
    }
    Ok(match splitting_in_quadratic(f.disc, p) {
        PrimeSplit::Split => {
            let (l0, l1) = split_local_odd(f, alpha, p)?;
            let (a0, a1) = (
                place_alg_odd(l0.val, l0.unit_symbol),
                place_alg_odd(l1.val, l1.unit_symbol),
            );
            QuarticSymbol::Pair { first: a0, second: a1, same: a0 == a1 }
        }
        PrimeSplit::Inert => {
            let lv = inert_local_odd(f, alpha, p)?;
            if lv.val % 2 == 1 {
                QuarticSymbol::RamOverInert { rel_exp: 1 }
            } else if lv.unit_symbol == 1 {
                QuarticSymbol::DoubleField { k_exp: None }
            } else {
                QuarticSymbol::UnramQuartic
            }
        }
        PrimeSplit::Ramified => {
            let lv = ram_local_odd(f, alpha, p)?;
            if lv.val % 2 == 1 {
                QuarticSymbol::TotRam { k_exp: 1, rel_exp: 1 }
            } else if lv.unit_symbol == 1 {
                QuarticSymbol::DoubleField { k_exp: Some(1) }
            } else {
                QuarticSymbol::UnramOverRam { k_exp: 1 }
            }
        }
    })
}

/// Is the pair totally ramified at p (both K/Q and L/K ramified there)?
pub fn totally_ramified_at(f: QuadraticField, alpha: FieldElement, p: u64) -> Result<bool> {
    if splitting_in_quadratic(f.disc, p) != PrimeSplit::Ramified {
        return Ok(false);
    }
    if p == 2 {
        Ok(matches!(dyadic_ext_type(f, alpha)?, LocalExtType::RamExt { .. }))
    } else {
        Ok(ram_local_odd(f, alpha, p)?.val % 2 == 1)
    }
}

/// Odd primes where the pair is totally ramified.
pub fn ramified_pair_primes(f: QuadraticField, alpha: FieldElement) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for p in odd_primes_of(f.disc.unsigned_abs()) {
        if totally_ramified_at(f, alpha, p)? {
            out.push(p);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Refined invariants away from S
// ---------------------------------------------------------------------------

/// Multiplicative invariants of the pair over the odd primes outside S
/// (S always implicitly contains 2 and infinity):
///
/// * `q_sigma`: primes where L ox Q_p is totally ramified;
/// * `q_sigma2`: primes unramified in K where both places of K ramify in L
///   (split with two ramified places, or inert with a ramified place);
/// * `q_tau`: split primes with exactly one place ramified in L;
/// * `d_s`: the prime-to-S part of |Delta(K)|.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefinedInvariants {
    pub q_sigma: u64,
    pub q_sigma2: u64,
    pub q_tau: u64,
    pub d_s: u64,
}

impl RefinedInvariants {
    /// Square of the height q_sigma^(1/2) q_sigma2 q_tau d_s.
    pub fn height_squared(&self) -> u64 {
        let rest = self.q_sigma2 as u128 * self.q_tau as u128 * self.d_s as u128;
        (self.q_sigma as u128)
            .checked_mul(rest * rest)
            .and_then(|h| h.try_into().ok())
            .expect("height overflow")
    }

    /// The height itself, defined when q_sigma = 1.
    pub fn height(&self) -> Result<u64> {
        if self.q_sigma != 1 {
            return Err(Error::InvalidAlpha(format!(
                "height is irrational: q_sigma = {}",
                self.q_sigma
            )));
        }
        Ok(self.q_sigma2 * self.q_tau * self.d_s)
    }
}

pub fn refined_invariants(
    f: QuadraticField,
    alpha: FieldElement,
    odd_s: &[u64],
) -> Result<RefinedInvariants> {
    if alpha.is_zero() {
        return Err(Error::InvalidAlpha("alpha must be nonzero".into()));
    }
    let nm_abs: u64 = alpha
        .norm(f)
        .unsigned_abs()
        .try_into()
        .map_err(|_| Error::BoundExceeded("norm too large to factor".into()))?;
    let mut inv = RefinedInvariants { q_sigma: 1, q_sigma2: 1, q_tau: 1, d_s: 1 };
    for p in odd_primes_of(nm_abs) {
        if odd_s.contains(&p) {
            continue;
        }
        match splitting_in_quadratic(f.disc, p) {
            PrimeSplit::Ramified => {
                if ram_local_odd(f, alpha, p)?.val % 2 == 1 {
                    inv.q_sigma *= p;
                }
            }
            PrimeSplit::Inert => {
                if inert_local_odd(f, alpha, p)?.val % 2 == 1 {
                    inv.q_sigma2 *= p;
                }
            }
            PrimeSplit::Split => {
                let (l0, l1) = split_local_odd(f, alpha, p)?;
                match (l0.val % 2, l1.val % 2) {
                    (1, 1) => inv.q_sigma2 *= p,
                    (1, 0) | (0, 1) => inv.q_tau *= p,
                    _ => {}
                }
            }
        }
    }
    for p in odd_primes_of(f.disc.unsigned_abs()) {
        if !odd_s.contains(&p) {
            inv.d_s *= p;
        }
    }
    Ok(inv)
}

/// The prime-to-S discriminant of the octic closure of a D4 pair:
/// the product over odd p outside S of p^(3 a + b + c + 2 n), where a, b, c
/// are the exponents of p in Delta(K), Delta(K'), Delta(K'') and n is the
/// exponent in Nm(d_{L/K}).  Equals the fourth power of the height.
pub fn octic_disc_prime_to_s(
    f: QuadraticField,
    alpha: FieldElement,
    odd_s: &[u64],
) -> Result<BigInt> {
    if galois_type(f, alpha)? != GaloisType::D4 {
        return Err(Error::WrongGaloisType(
            "octic closure requires a D4 pair".into(),
        ));
    }
    let nm = alpha.norm(f);
    let nm_i64: i64 = nm.try_into().map_err(|_| Error::BoundExceeded("norm too large".into()))?;
    let (n1, _) = squarefree_decompose(nm_i64);
    let d1 = fundamental_discriminant(n1)?;
    let prod = (f.disc as i128).checked_mul(nm).expect("norm overflow");
    let prod_i64: i64 = prod
        .try_into()
        .map_err(|_| Error::BoundExceeded("product too large".into()))?;
    let (n2, _) = squarefree_decompose(prod_i64);
    let d2 = fundamental_discriminant(n2)?;
    let rel = relative_discriminant(f, alpha)?;
    let mut primes: Vec<u64> = Vec::new();
    for n in [f.disc.unsigned_abs(), d1.unsigned_abs(), d2.unsigned_abs()] {
        primes.extend(odd_primes_of(n));
    }
    primes.extend(rel.iter().map(|r| r.p).filter(|&p| p != 2));
    primes.sort_unstable();
    primes.dedup();
    let mut out = BigInt::from(1);
    for p in primes {
        if odd_s.contains(&p) {
            continue;
        }
        let e = 3 * valp_i64(f.disc, p)
            + valp_i64(d1, p)
            + valp_i64(d2, p)
            + 2 * valp_rel_norm(&rel, p);
        out *= BigInt::from(p).pow(e);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The flip involution
// ---------------------------------------------------------------------------

/// Exchange the roles of K and K' = Q(sqrt(Nm alpha)) in the closure: the
/// pair (K, alpha) with alpha = x + y sqrt(D), Nm(alpha) = n m^2, maps to
/// (K', 2x + 2m sqrt(n)) up to squares.  Defined when Nm(alpha) is not a
/// square (D4 or C4 pairs); applying it twice returns 4 alpha.
pub fn flip(f: QuadraticField, alpha: FieldElement) -> Result<(QuadraticField, FieldElement)> {
    match galois_type(f, alpha)? {
        GaloisType::V4 => {
            return Err(Error::WrongGaloisType(
                "flip needs a nonsquare norm (D4 or C4)".into(),
            ))
        }
        GaloisType::C4 | GaloisType::D4 => {}
    }
    let nm = alpha.norm(f);
    let nm_i64: i64 = nm.try_into().map_err(|_| Error::BoundExceeded("norm too large".into()))?;
    let (n, m) = squarefree_decompose(nm_i64);
    let f2 = QuadraticField::from_radicand(n)?;
    // alpha' = A + 2 m sqrt(n) where A = Tr(alpha) = 2x.
    let a = alpha.a;
    let elem = if f2.disc % 4 == 0 {
        // sqrt(n) = sqrt(D')/2
        FieldElement { a: 2 * a, b: 2 * m as i128 }
    } else {
        FieldElement { a: 2 * a, b: 4 * m as i128 }
    };
    let rep = square_class_rep(f2, &BigElem::from_field_element(elem))?;
    Ok((f2, rep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{factor_mod_p, maximal_order_disc};
    use num_traits::Zero;

    const FIELDS: [i64; 20] = [
        17, 33, -7, 41, -15, 5, 13, -3, 21, 29, -19, 8, 12, -4, -8, -20, 24, 40, -40, 56,
    ];

    const COORDS: [(i128, i128); 8] =
        [(1, 1), (2, 1), (3, 1), (1, 2), (5, 2), (3, 2), (0, 1), (1, 3)];

    fn battery() -> Vec<(QuadraticField, FieldElement)> {
        let mut out = Vec::new();
        for d in FIELDS {
            let f = QuadraticField::from_disc(d).unwrap();
            for (x, y) in COORDS {
                let alpha = FieldElement::from_integers(x, y);
                if alpha.norm(f) == 0 || is_square(f, alpha).is_some() {
                    continue;
                }
                out.push((f, alpha));
            }
        }
        out
    }

    fn val_big(n: &BigInt, p: u64) -> u32 {
        assert!(!n.is_zero());
        let pb = BigInt::from(p);
        let mut m = n.clone();
        let mut v = 0;
        while (&m % &pb).is_zero() {
            m /= &pb;
            v += 1;
        }
        v
    }

    #[test]
    fn galois_type_anchors() {
        let fi = QuadraticField::from_disc(-4).unwrap();
        assert_eq!(galois_type(fi, FieldElement::from_rational(3)).unwrap(), GaloisType::V4);
        let f5 = QuadraticField::from_disc(5).unwrap();
        // (5 + sqrt 5)/2 has norm 5; 5 * 5 is a square: cyclic closure.
        let c4 = FieldElement { a: 5, b: 1 };
        assert_eq!(galois_type(f5, c4).unwrap(), GaloisType::C4);
        let f8 = QuadraticField::from_disc(8).unwrap();
        let sqrt2 = FieldElement { a: 0, b: 1 };
        assert_eq!(galois_type(f8, sqrt2).unwrap(), GaloisType::D4);
        assert!(matches!(
            galois_type(f8, FieldElement::from_rational(4)),
            Err(Error::InvalidAlpha(_))
        ));
    }

    #[test]
    fn relative_discriminant_anchors() {
        // (Q(i), 3): 3 is inert, d = (3).
        let fi = QuadraticField::from_disc(-4).unwrap();
        let d3 = relative_discriminant(fi, FieldElement::from_rational(3)).unwrap();
        assert_eq!(d3, vec![RelDiscPlace { p: 3, place: 0, residue_degree: 2, exp: 1 }]);
        assert_eq!(rel_disc_norm(fi, FieldElement::from_rational(3)).unwrap(), BigInt::from(9));
        // (Q(i), i): d = (1 + i)^4.
        let unit_i = FieldElement::from_omega_coords(fi, 0, 1);
        let di = relative_discriminant(fi, unit_i).unwrap();
        assert_eq!(di, vec![RelDiscPlace { p: 2, place: 0, residue_degree: 1, exp: 4 }]);
        // (Q(sqrt 5), -1): d = (2)^2.
        let f5 = QuadraticField::from_disc(5).unwrap();
        let dm1 = relative_discriminant(f5, FieldElement::from_rational(-1)).unwrap();
        assert_eq!(dm1, vec![RelDiscPlace { p: 2, place: 0, residue_degree: 2, exp: 2 }]);
    }

    #[test]
    fn absolute_disc_anchors() {
        let fi = QuadraticField::from_disc(-4).unwrap();
        assert_eq!(
            absolute_quartic_disc(fi, FieldElement::from_rational(3)).unwrap(),
            BigInt::from(144)
        );
        assert_eq!(
            absolute_quartic_disc(fi, FieldElement::from_omega_coords(fi, 0, 1)).unwrap(),
            BigInt::from(256)
        );
        let f5 = QuadraticField::from_disc(5).unwrap();
        assert_eq!(
            absolute_quartic_disc(f5, FieldElement::from_rational(-1)).unwrap(),
            BigInt::from(400)
        );
        let f8 = QuadraticField::from_disc(8).unwrap();
        assert_eq!(
            absolute_quartic_disc(f8, FieldElement { a: 0, b: 1 }).unwrap(),
            BigInt::from(-2048)
        );
    }

    #[test]
    fn absolute_disc_matches_maximal_order_oracle() {
        let mut checked = 0;
        for (f, alpha) in battery() {
            let poly = quartic_polynomial(f, alpha).unwrap();
            let oracle = maximal_order_disc(&poly).unwrap();
            assert_eq!(
                absolute_quartic_disc(f, alpha).unwrap(),
                oracle,
                "disc of sqrt({alpha:?}) over {}",
                f.disc
            );
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn disc_valuation_triples_obey_the_tame_law() {
        for (f, alpha) in battery() {
            let disc_l = absolute_quartic_disc(f, alpha).unwrap();
            let rel = relative_discriminant(f, alpha).unwrap();
            for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29] {
                let trip = (
                    val_big(&disc_l, p),
                    valp_i64(f.disc, p),
                    valp_rel_norm(&rel, p),
                );
                assert!(
                    [(0, 0, 0), (1, 0, 1), (2, 1, 0), (3, 1, 1), (2, 0, 2)].contains(&trip),
                    "triple {trip:?} at {p} for {alpha:?} over {}",
                    f.disc
                );
            }
        }
    }

    #[test]
    fn splitting_symbols_match_polynomial_factorization() {
        let mut checked = 0;
        for (f, alpha) in battery() {
            let poly = quartic_polynomial(f, alpha).unwrap();
            // Factorization mod p mirrors the splitting shape only away
            // from the discriminant of the polynomial itself (index primes
            // distort the factor pattern).
            let pd = crate::oracle::poly_disc(&poly.map(BigInt::from));
            for p in [3u64, 5, 7, 11, 13] {
                if (&pd % BigInt::from(p)).is_zero() {
                    continue;
                }
                let shape = factor_mod_p(&poly, p).unwrap();
                let expected: Vec<(u32, u32)> = match splitting_type(f, alpha, p).unwrap() {
                    QuarticSymbol::Pair { first, second, .. } => {
                        let mut v = Vec::new();
                        for a in [first, second] {
                            match a {
                                PlaceAlg::Split => v.extend([(1, 1), (1, 1)]),
                                PlaceAlg::Inert => v.push((2, 1)),
                                PlaceAlg::Ram { .. } => unreachable!("p unramified in L"),
                            }
                        }
                        v.sort();
                        v
                    }
                    QuarticSymbol::DoubleField { k_exp: None } => vec![(2, 1), (2, 1)],
                    QuarticSymbol::UnramQuartic => vec![(4, 1)],
                    other => unreachable!("{other:?} at a prime not dividing the discriminant"),
                };
                assert_eq!(shape, expected, "symbol at {p} for {alpha:?} over {}", f.disc);
                checked += 1;
            }
        }
        assert!(checked > 200);
    }

    #[test]
    fn symbol_labels() {
        let f8 = QuadraticField::from_disc(8).unwrap();
        let sqrt2 = FieldElement { a: 0, b: 1 };
        assert_eq!(splitting_type(f8, sqrt2, 2).unwrap().label(), "1^4");
        assert_eq!(base_symbol_label(f8, 2), "1^2_3");
        let fi = QuadraticField::from_disc(-4).unwrap();
        assert_eq!(base_symbol_label(fi, 2), "1^2_2");
        assert_eq!(base_symbol_label(fi, 5), "11");
        assert_eq!(base_symbol_label(fi, 3), "2");
        // 3 stays inert in Q(i): L = Q(i, sqrt 3) has shape (2^2) at 3.
        assert_eq!(splitting_type(fi, FieldElement::from_rational(3), 3).unwrap().label(), "2^2");
        // 7 is inert in Q(sqrt 17): kronecker(17, 7) = kronecker(3, 7) = -1.
        let f17 = QuadraticField::from_disc(17).unwrap();
        assert_eq!(
            splitting_type(f17, FieldElement::from_rational(7), 7).unwrap().label(),
            "2^2"
        );
        let f5 = QuadraticField::from_disc(5).unwrap();
        // 11 splits in Q(sqrt 5); alpha = 11 ramifies both places: (1^2 1^2).
        let lbl = splitting_type(f5, FieldElement::from_rational(11), 11).unwrap().label();
        assert!(lbl == "1^21^2" || lbl == "1^21^2'", "got {lbl}");
    }

    #[test]
    fn refined_invariant_anchors() {
        let f8 = QuadraticField::from_disc(8).unwrap();
        let inv = refined_invariants(f8, FieldElement { a: 0, b: 1 }, &[]).unwrap();
        assert_eq!(inv, RefinedInvariants { q_sigma: 1, q_sigma2: 1, q_tau: 1, d_s: 1 });
        assert_eq!(inv.height().unwrap(), 1);
        let fi = QuadraticField::from_disc(-4).unwrap();
        let inv = refined_invariants(fi, FieldElement::from_rational(3), &[]).unwrap();
        assert_eq!(inv, RefinedInvariants { q_sigma: 1, q_sigma2: 3, q_tau: 1, d_s: 1 });
        assert_eq!(inv.height().unwrap(), 3);
        let fm3 = QuadraticField::from_disc(-3).unwrap();
        let inv = refined_invariants(fm3, FieldElement::from_rational(5), &[]).unwrap();
        assert_eq!(inv, RefinedInvariants { q_sigma: 1, q_sigma2: 5, q_tau: 1, d_s: 3 });
        assert_eq!(inv.height().unwrap(), 15);
        // With 3 placed into S the discriminant part drops out.
        let inv = refined_invariants(fm3, FieldElement::from_rational(5), &[3]).unwrap();
        assert_eq!(inv.d_s, 1);
    }

    #[test]
    fn octic_disc_is_fourth_power_of_height() {
        let mut checked = 0;
        for (f, alpha) in battery() {
            if galois_type(f, alpha).unwrap() != GaloisType::D4 {
                continue;
            }
            for odd_s in [vec![], vec![3], vec![3, 5]] {
                let inv = refined_invariants(f, alpha, &odd_s).unwrap();
                let h4 = BigInt::from(inv.q_sigma).pow(2)
                    * BigInt::from(inv.q_sigma2 * inv.q_tau * inv.d_s).pow(4);
                assert_eq!(
                    octic_disc_prime_to_s(f, alpha, &odd_s).unwrap(),
                    h4,
                    "octic disc for {alpha:?} over {} away from {odd_s:?}",
                    f.disc
                );
            }
            checked += 1;
        }
        assert!(checked > 40);
    }

    #[test]
    fn flip_anchor() {
        let f8 = QuadraticField::from_disc(8).unwrap();
        let sqrt2 = FieldElement { a: 0, b: 1 };
        let (f2, beta) = flip(f8, sqrt2).unwrap();
        assert_eq!(f2.disc, -8);
        // beta should be -sqrt(-2) up to squares.
        let target = FieldElement { a: 0, b: -1 };
        let ratio = beta.mul(target, f2);
        assert!(is_square(f2, ratio).is_some(), "beta = {beta:?}");
    }

    #[test]
    fn flip_hand_example() {
        // (Q(i), 1 + 2i) has q_tau = 5; its flip (Q(sqrt 5), ...) has d_s = 5.
        let fi = QuadraticField::from_disc(-4).unwrap();
        let alpha = FieldElement { a: 2, b: 2 };
        let inv = refined_invariants(fi, alpha, &[]).unwrap();
        assert_eq!(inv, RefinedInvariants { q_sigma: 1, q_sigma2: 1, q_tau: 5, d_s: 1 });
        let (f2, beta) = flip(fi, alpha).unwrap();
        assert_eq!(f2.disc, 5);
        let inv2 = refined_invariants(f2, beta, &[]).unwrap();
        assert_eq!(inv2, RefinedInvariants { q_sigma: 1, q_sigma2: 1, q_tau: 1, d_s: 5 });
    }

    #[test]
    fn flip_is_an_involution_and_swaps_invariants() {
        let mut checked = 0;
        for (f, alpha) in battery() {
            if galois_type(f, alpha).unwrap() != GaloisType::D4 {
                continue;
            }
            let (f2, beta) = flip(f, alpha).unwrap();
            // Totally ramified support is preserved.
            let s1 = ramified_pair_primes(f, alpha).unwrap();
            let s2 = ramified_pair_primes(f2, beta).unwrap();
            assert_eq!(s1, s2, "flip support for {alpha:?} over {}", f.disc);
            // Away from the pair's own ramified set, d_s and q_tau swap
            // while q_sigma2 is fixed.
            let inv1 = refined_invariants(f, alpha, &s1).unwrap();
            let inv2 = refined_invariants(f2, beta, &s2).unwrap();
            assert_eq!(inv1.q_sigma, 1);
            assert_eq!(inv2.q_sigma, 1);
            assert_eq!(inv1.q_sigma2, inv2.q_sigma2, "sigma2 fixed for {alpha:?}/{}", f.disc);
            assert_eq!(inv1.q_tau, inv2.d_s, "tau -> d for {alpha:?}/{}", f.disc);
            assert_eq!(inv1.d_s, inv2.q_tau, "d -> tau for {alpha:?}/{}", f.disc);
            // Applying the flip twice returns the original pair, up to the
            // automorphism of K (conjugation).
            let (f3, gamma) = flip(f2, beta).unwrap();
            assert_eq!(f3.disc, f.disc);
            assert!(
                is_square(f, gamma.mul(alpha, f)).is_some()
                    || is_square(f, gamma.mul(alpha.conj(), f)).is_some(),
                "flip^2 class for {alpha:?} over {}",
                f.disc
            );
            checked += 1;
        }
        assert!(checked > 40);
    }

    #[test]
    fn complex_place_counts() {
        let fi = QuadraticField::from_disc(-4).unwrap();
        assert_eq!(complex_places(fi, FieldElement::from_rational(3)), 2);
        let f8 = QuadraticField::from_disc(8).unwrap();
        assert_eq!(complex_places(f8, FieldElement { a: 0, b: 1 }), 1);
        assert_eq!(complex_places(f8, FieldElement::from_rational(3)), 0);
        assert_eq!(complex_places(f8, FieldElement::from_rational(-1)), 2);
        let f5 = QuadraticField::from_disc(5).unwrap();
        // The golden-ratio unit is positive at one real place only.
        assert_eq!(complex_places(f5, FieldElement { a: 1, b: 1 }), 1);
    }

    #[test]
    fn tot_ram_probes() {
        let f8 = QuadraticField::from_disc(8).unwrap();
        assert!(totally_ramified_at(f8, FieldElement { a: 0, b: 1 }, 2).unwrap());
        assert!(!totally_ramified_at(f8, FieldElement::from_rational(-1), 3).unwrap());
        let f12 = QuadraticField::from_disc(12).unwrap();
        let sqrt3 = FieldElement { a: 0, b: 1 };
        assert!(totally_ramified_at(f12, sqrt3, 3).unwrap());
        assert_eq!(ramified_pair_primes(f12, sqrt3).unwrap(), vec![3]);
    }
}
