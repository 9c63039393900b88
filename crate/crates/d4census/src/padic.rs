//! Local (p-adic) analysis of quadratic fields and their quadratic
//! extensions.
//!
//! The exported tools fall into three groups:
//!
//! * square classes of Q_2^* and Hilbert symbols over Q_p;
//! * localization of a global element of a quadratic field K at a prime,
//!   giving its valuation and unit class at each place;
//! * classification of the local quadratic extension K_P(sqrt(alpha))/K_P
//!   at a dyadic place via quadratic defects, including a full model of
//!   the sixteen square classes of K_P^* with their Hilbert pairing.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::{is_prime, legendre, powmod, sqrt_mod_p};
use crate::qfield::{
    prime_ideal_above, splitting_in_quadratic, FieldElement, PrimeIdealData, PrimeSplit,
    QuadraticField,
};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Square classes of Q_2^*
// ---------------------------------------------------------------------------

/// A square class of Q_2^*: the valuation mod 2 and the odd part mod 8.
/// There are eight classes, represented by {1, 3, 5, 7, 2, 6, 10, 14}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Q2Class {
    pub odd_val: bool,
    pub unit8: u8,
}

impl Q2Class {
    pub fn of(n: i128) -> Q2Class {
        assert!(n != 0, "square class of zero");
        let v = n.trailing_zeros();
        let odd = n >> v;
        Q2Class {
            odd_val: v % 2 == 1,
            unit8: odd.rem_euclid(8) as u8,
        }
    }

    pub const TRIVIAL: Q2Class = Q2Class {
        odd_val: false,
        unit8: 1,
    };

    pub const ALL: [Q2Class; 8] = [
        Q2Class { odd_val: false, unit8: 1 },
        Q2Class { odd_val: false, unit8: 3 },
        Q2Class { odd_val: false, unit8: 5 },
        Q2Class { odd_val: false, unit8: 7 },
        Q2Class { odd_val: true, unit8: 1 },
        Q2Class { odd_val: true, unit8: 3 },
        Q2Class { odd_val: true, unit8: 5 },
        Q2Class { odd_val: true, unit8: 7 },
    ];

    pub fn is_trivial(self) -> bool {
        !self.odd_val && self.unit8 == 1
    }

    pub fn mul(self, o: Q2Class) -> Q2Class {
        Q2Class {
            odd_val: self.odd_val ^ o.odd_val,
            unit8: ((self.unit8 as u16 * o.unit8 as u16) % 8) as u8,
        }
    }
}

/// The quadratic Q_2-algebra Q_2[x]/(x^2 - c) for c in the given class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuadAlgebra2 {
    /// c a square: Q_2 x Q_2.
    Split,
    /// c = 5 mod squares: the unramified quadratic field.
    Unramified,
    /// a ramified quadratic field with the given discriminant exponent
    /// (2 for c in {-1, -5}, 3 for c in {2, -2, 10, -10}).
    Ramified { exp: u32 },
}

pub fn q2_quad_algebra(c: Q2Class) -> QuadAlgebra2 {
    if c.odd_val {
        QuadAlgebra2::Ramified { exp: 3 }
    } else {
        match c.unit8 {
            1 => QuadAlgebra2::Split,
            5 => QuadAlgebra2::Unramified,
            _ => QuadAlgebra2::Ramified { exp: 2 },
        }
    }
}

/// Exponent of 2 in the discriminant of Q_2(sqrt(c)).
pub fn q2_disc_exponent(c: Q2Class) -> u32 {
    match q2_quad_algebra(c) {
        QuadAlgebra2::Ramified { exp } => exp,
        _ => 0,
    }
}

// ---------------------------------------------------------------------------
// Hilbert symbols over Q_p
// ---------------------------------------------------------------------------

fn split_off_prime(mut n: i128, p: i128) -> (u32, i128) {
    assert!(n != 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

/// Hilbert symbol (a, b)_2 over Q_2.
pub fn hilbert2(a: i128, b: i128) -> i32 {
    assert!(a != 0 && b != 0);
    let (va, u) = split_off_prime(a, 2);
    let (vb, w) = split_off_prime(b, 2);
    let eps = |n: i128| ((n.rem_euclid(8) - 1) / 2) % 2;
    let omg = |n: i128| {
        let r = n.rem_euclid(8);
        ((r * r - 1) / 8) % 2
    };
    let e = eps(u) * eps(w) + (va as i128 % 2) * omg(w) + (vb as i128 % 2) * omg(u);
    if e % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Hilbert symbol (a, b)_p over Q_p for odd p.
pub fn hilbert_odd(a: i128, b: i128, p: u64) -> i32 {
    assert!(a != 0 && b != 0 && p % 2 == 1 && is_prime(p));
    let (va, u) = split_off_prime(a, p as i128);
    let (vb, w) = split_off_prime(b, p as i128);
    let lu = legendre(u.rem_euclid(p as i128) as i64, p);
    let lw = legendre(w.rem_euclid(p as i128) as i64, p);
    let mut r = 1;
    if va % 2 == 1 && vb % 2 == 1 && p % 4 == 3 {
        r = -r;
    }
    if vb % 2 == 1 {
        r *= lu;
    }
    if va % 2 == 1 {
        r *= lw;
    }
    r
}

// ---------------------------------------------------------------------------
// Hensel square roots
// ---------------------------------------------------------------------------

/// Square root of a = 1 (mod 8) in Z/2^k, normalized to 1 (mod 4); k >= 3.
pub fn sqrt_mod_2k(a: &BigInt, k: u32) -> BigInt {
    assert!(k >= 3);
    assert!(a.mod_floor(&BigInt::from(8)) == BigInt::one(), "need a = 1 mod 8");
    let mut r = BigInt::one();
    for j in 3..k {
        // Invariant: r^2 = a (mod 2^j), r = 1 (mod 4).
        let q = (&r * &r - a) >> j;
        if q.mod_floor(&BigInt::from(2)) == BigInt::one() {
            r += BigInt::one() << (j - 1);
        }
    }
    r.mod_floor(&(BigInt::one() << k))
}

/// Square root of a unit a in Z/p^k for odd p, if one exists.
pub fn sqrt_mod_pk(a: &BigInt, p: u64, k: u32) -> Option<BigInt> {
    assert!(p % 2 == 1 && is_prime(p) && k >= 1);
    let pb = BigInt::from(p);
    let a0 = a.mod_floor(&pb);
    let a0: u64 = a0.try_into().expect("residue fits");
    if a0 == 0 {
        return None;
    }
    let r0 = sqrt_mod_p(a0, p)?;
    let inv2r = powmod(2 * r0 % p, p - 2, p);
    let mut r = BigInt::from(r0);
    let mut modulus = pb.clone();
    for _ in 1..k {
        let next = &modulus * &pb;
        // r^2 - a is divisible by `modulus`; kill the next digit.
        let t = ((&r * &r - a) / &modulus).mod_floor(&pb);
        let t: u64 = t.try_into().expect("digit fits");
        let delta = t as u128 * inv2r as u128 % p as u128;
        r = (&r - BigInt::from(delta) * &modulus).mod_floor(&next);
        modulus = next;
    }
    Some(r)
}

// ---------------------------------------------------------------------------
// Localization at odd primes
// ---------------------------------------------------------------------------

/// Valuation and unit-class data of an element at one place over an odd p.
/// `unit_symbol` is the Legendre symbol of the unit part in the residue
/// field (for a ramified place, the unit part is taken with respect to the
/// uniformizer sqrt(D)).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalVal {
    pub val: u32,
    pub unit_symbol: i32,
}

fn valp_big(n: &BigInt, p: u64) -> u32 {
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

fn valp_i128(n: i128, p: u64) -> u32 {
    split_off_prime(n, p as i128).0
}

/// Localizations of alpha at the two places of K over a split odd prime p,
/// ordered so that the first entry is the place of `prime_ideal_above`'s
/// first ideal.
pub fn split_local_odd(
    f: QuadraticField,
    alpha: FieldElement,
    p: u64,
) -> Result<(LocalVal, LocalVal)> {
    if p == 2 || !is_prime(p) {
        return Err(Error::InvalidFactor(format!("need an odd prime, got {p}")));
    }
    if splitting_in_quadratic(f.disc, p) != PrimeSplit::Split {
        return Err(Error::InvalidFactor(format!("{p} is not split")));
    }
    assert!(!alpha.is_zero());
    let nm = alpha.norm(f);
    let vmax = valp_i128(nm, p);
    let k = vmax + 2;
    let pb = BigInt::from(p);
    let pk = pb.pow(k);
    let root = sqrt_mod_pk(&BigInt::from(f.disc).mod_floor(&pk), p, k)
        .expect("split prime has a root");
    let PrimeIdealData::Split(ideal, _) = prime_ideal_above(f, p)? else {
        unreachable!()
    };
    let bc = BigInt::from(ideal.b_classic(f));
    // The first place sends sqrt(D) to the root that is -b_classic mod p.
    let first = if (&root + &bc).mod_floor(&pb).is_zero() {
        root.clone()
    } else {
        &pk - &root
    };
    let second = (&pk - &first).mod_floor(&pk);
    let inv2 = (&pk + BigInt::one()) / BigInt::from(2);
    let localize = |s: &BigInt| -> LocalVal {
        let num = (BigInt::from(alpha.a) + BigInt::from(alpha.b) * s).mod_floor(&pk);
        let x = (num * &inv2).mod_floor(&pk);
        assert!(!x.is_zero(), "valuation exceeds norm bound");
        let v = valp_big(&x, p);
        assert!(v <= vmax);
        let u = (x / pb.pow(v)).mod_floor(&pb);
        let u: u64 = u.try_into().expect("unit residue fits");
        LocalVal {
            val: v,
            unit_symbol: legendre(u as i64, p),
        }
    };
    let l0 = localize(&first);
    let l1 = localize(&second);
    debug_assert_eq!(l0.val + l1.val, vmax);
    Ok((l0, l1))
}

/// Localization of alpha at the unique place over an inert odd prime p.
pub fn inert_local_odd(f: QuadraticField, alpha: FieldElement, p: u64) -> Result<LocalVal> {
    if p == 2 || splitting_in_quadratic(f.disc, p) != PrimeSplit::Inert {
        return Err(Error::InvalidFactor(format!("{p} is not inert and odd")));
    }
    assert!(!alpha.is_zero());
    let nm = alpha.norm(f);
    let v2 = valp_i128(nm, p);
    debug_assert!(v2 % 2 == 0, "inert valuations double in the norm");
    let u = nm / (p as i128).pow(v2);
    // A unit of the quadratic residue extension is a square iff its norm
    // is a square in F_p.
    Ok(LocalVal {
        val: v2 / 2,
        unit_symbol: legendre(u.rem_euclid(p as i128) as i64, p),
    })
}

/// Localization of alpha at the ramified place over an odd p | D.  The
/// unit part is alpha / sqrt(D)^val, whose residue lies in F_p.
pub fn ram_local_odd(f: QuadraticField, alpha: FieldElement, p: u64) -> Result<LocalVal> {
    if p == 2 || splitting_in_quadratic(f.disc, p) != PrimeSplit::Ramified {
        return Err(Error::InvalidFactor(format!("{p} is not ramified and odd")));
    }
    assert!(!alpha.is_zero());
    let nm = alpha.norm(f);
    let v = valp_i128(nm, p);
    let pb = BigInt::from(p);
    let pk = pb.pow(v + 1);
    let s = f.s0() as i128;
    let q = f.wq() as i128;
    // gamma = alpha * sqrt(D)^v in omega coordinates, mod p^(v+1);
    // sqrt(D) = -s + 2 w.
    let (x0, y0) = alpha.omega_coords(f);
    let mut x = BigInt::from(x0).mod_floor(&pk);
    let mut y = BigInt::from(y0).mod_floor(&pk);
    for _ in 0..v {
        let nx = (-BigInt::from(s) * &x + BigInt::from(2 * q) * &y).mod_floor(&pk);
        let ny = (BigInt::from(2) * &x + BigInt::from(s) * &y).mod_floor(&pk);
        x = nx;
        y = ny;
    }
    // gamma lies in p^v O, so both residues are divisible by p^v.
    let pv = pb.pow(v);
    assert!((&x % &pv).is_zero() && (&y % &pv).is_zero());
    let xr = (x / &pv).mod_floor(&pb);
    let yr = (y / &pv).mod_floor(&pb);
    // Residue at the ramified place: w = s * inv2 there.
    let inv2 = powmod((p + 1) / 2, 1, p);
    let xr: u64 = xr.try_into().expect("fits");
    let yr: u64 = yr.try_into().expect("fits");
    let mut res = (xr as u128 + yr as u128 * s.rem_euclid(p as i128) as u128 * inv2 as u128)
        .rem_euclid(p as u128) as u64;
    // Undo the norm factor: alpha / sqrt(D)^v = gamma / D^v = (gamma/p^v) / (D/p)^v.
    let dp = ((f.disc / p as i64).rem_euclid(p as i64)) as u64;
    let dp_inv = powmod(dp, p - 2, p);
    for _ in 0..v {
        res = mulmod_u64(res, dp_inv, p);
    }
    assert!(res != 0, "unit part must be a unit");
    Ok(LocalVal {
        val: v,
        unit_symbol: legendre(res as i64, p),
    })
}

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

// ---------------------------------------------------------------------------
// Localization at 2 when 2 splits
// ---------------------------------------------------------------------------

/// A localized value at a dyadic place: full valuation and odd part mod 8.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Q2ValClass {
    pub val: u32,
    pub unit8: u8,
}

impl Q2ValClass {
    pub fn class(self) -> Q2Class {
        Q2Class {
            odd_val: self.val % 2 == 1,
            unit8: self.unit8,
        }
    }
}

/// Localizations of alpha at the two places of K over 2 when 2 splits
/// (D = 1 mod 8), ordered as in `prime_ideal_above`.
pub fn split_local_q2(f: QuadraticField, alpha: FieldElement) -> Result<(Q2ValClass, Q2ValClass)> {
    if splitting_in_quadratic(f.disc, 2) != PrimeSplit::Split {
        return Err(Error::InvalidFactor("2 does not split".into()));
    }
    assert!(!alpha.is_zero());
    let nm = alpha.norm(f);
    let vmax = nm.trailing_zeros();
    let k = vmax + 5;
    let big = BigInt::one() << (k + 2);
    let root = sqrt_mod_2k(&BigInt::from(f.disc).mod_floor(&big), k + 2);
    // The first place of prime_ideal_above has b_classic = 1, so it uses
    // the root that is -1 mod 4; sqrt_mod_2k returns the root that is +1.
    let first = (&big - &root).mod_floor(&big);
    let second = root;
    let localize = |s: &BigInt| -> Q2ValClass {
        let num = (BigInt::from(alpha.a) + BigInt::from(alpha.b) * s).mod_floor(&big);
        debug_assert!(num.is_even());
        let x = (num >> 1u32).mod_floor(&(BigInt::one() << (k + 1)));
        assert!(!x.is_zero());
        let v = x.trailing_zeros().expect("nonzero") as u32;
        assert!(v <= vmax);
        let u: u8 = (&x >> v)
            .mod_floor(&BigInt::from(8))
            .try_into()
            .expect("fits");
        Q2ValClass { val: v, unit8: u }
    };
    let l0 = localize(&first);
    let l1 = localize(&second);
    debug_assert_eq!(l0.val + l1.val, vmax);
    debug_assert_eq!(
        (l0.unit8 as u16 * l1.unit8 as u16) % 8,
        ((nm >> vmax).rem_euclid(8)) as u16
    );
    Ok((l0, l1))
}

// ---------------------------------------------------------------------------
// Dyadic places of K when 2 is inert or ramified: quadratic defects
// ---------------------------------------------------------------------------

/// Type of the local quadratic extension K_P(sqrt(alpha)) / K_P.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocalExtType {
    /// alpha is a local square: K_P x K_P.
    SplitExt,
    /// the unramified quadratic extension of K_P.
    UnramExt,
    /// a ramified extension with the given relative discriminant exponent.
    RamExt { rel_exp: u32 },
}

/// Valuation of a nonzero element at the unique prime over 2 (2 non-split).
pub fn dyadic_valuation(f: QuadraticField, z: FieldElement) -> Result<u32> {
    assert!(!z.is_zero());
    match splitting_in_quadratic(f.disc, 2) {
        PrimeSplit::Split => Err(Error::InvalidFactor("2 splits; use split_local_q2".into())),
        PrimeSplit::Inert => {
            let (x, y) = z.omega_coords(f);
            Ok(if x == 0 {
                y.trailing_zeros()
            } else if y == 0 {
                x.trailing_zeros()
            } else {
                x.trailing_zeros().min(y.trailing_zeros())
            })
        }
        PrimeSplit::Ramified => Ok(z.norm(f).trailing_zeros()),
    }
}

/// Write alpha = pi^(v mod 2) * u * (square), with u a unit reduced mod 8.
/// Returns (v, u) where v is the full valuation.  Here pi is 2 at an inert
/// place and the generator b + w of the ramified prime otherwise.
fn dyadic_unit_part(f: QuadraticField, alpha: FieldElement) -> Result<(u32, FieldElement)> {
    assert!(!alpha.is_zero());
    if alpha.a.unsigned_abs() > 4e17 as u128 || alpha.b.unsigned_abs() > 4e17 as u128 {
        return Err(Error::BoundExceeded("element too large to localize".into()));
    }
    match splitting_in_quadratic(f.disc, 2) {
        PrimeSplit::Split => Err(Error::InvalidFactor("2 splits".into())),
        PrimeSplit::Inert => {
            let v = dyadic_valuation(f, alpha)?;
            let (x, y) = alpha.omega_coords(f);
            let u = FieldElement::from_omega_coords(
                f,
                (x >> v).rem_euclid(8),
                (y >> v).rem_euclid(8),
            );
            Ok((v, u))
        }
        PrimeSplit::Ramified => {
            let v = dyadic_valuation(f, alpha)?;
            if v > 24 {
                return Err(Error::BoundExceeded(format!("dyadic valuation {v} too large")));
            }
            // For even v, u = alpha pi^v / 2^v; for odd v,
            // u = alpha pi^(v+2) / 2^(v+1).  Both divisions are exact and
            // every discarded factor is a square, up to one factor pi when
            // v is odd.
            let (pi_mults, div_pow) = if v % 2 == 0 { (v, v) } else { (v + 2, v + 1) };
            let m: i128 = 1i128 << (div_pow + 3);
            let PrimeIdealData::Ramified(ideal) = prime_ideal_above(f, 2)? else {
                unreachable!()
            };
            let pb = ideal.b;
            let s = f.s0() as i128;
            let q = f.wq() as i128;
            let (mut x, mut y) = alpha.omega_coords(f);
            x = x.rem_euclid(m);
            y = y.rem_euclid(m);
            for _ in 0..pi_mults {
                // (x + y w)(pb + w) with w^2 = q + s w.
                let nx = (x * pb + y * q).rem_euclid(m);
                let ny = (x + y * (pb + s)).rem_euclid(m);
                x = nx;
                y = ny;
            }
            let dp = 1i128 << div_pow;
            assert!(x % dp == 0 && y % dp == 0, "inexact dyadic division");
            let u = FieldElement::from_omega_coords(f, (x / dp).rem_euclid(8), (y / dp).rem_euclid(8));
            Ok((v, u))
        }
    }
}

/// Quadratic defect of a unit u, capped at `cap`: the largest valuation of
/// u t^2 - 1 over units t, or `cap` if that valuation reaches it.
fn dyadic_defect(f: QuadraticField, u: FieldElement, cap: u32) -> u32 {
    debug_assert!(u.norm(f) % 2 != 0, "defect needs a unit");
    let mut best = 0;
    for x in 0..8i128 {
        for y in 0..8i128 {
            let t = FieldElement::from_omega_coords(f, x, y);
            if t.norm(f) % 2 == 0 {
                continue;
            }
            let z = u.mul(t, f).mul(t, f).add(FieldElement::ONE.neg());
            let v = if z.is_zero() {
                cap
            } else {
                dyadic_valuation(f, z).expect("2 non-split").min(cap)
            };
            if v > best {
                best = v;
                if best >= cap {
                    return cap;
                }
            }
        }
    }
    best
}

/// Classify K_P(sqrt(alpha))/K_P at the unique dyadic place (2 non-split).
pub fn dyadic_ext_type(f: QuadraticField, alpha: FieldElement) -> Result<LocalExtType> {
    let e = match splitting_in_quadratic(f.disc, 2) {
        PrimeSplit::Split => {
            return Err(Error::InvalidFactor("2 splits; classify per place".into()))
        }
        PrimeSplit::Inert => 1u32,
        PrimeSplit::Ramified => 2u32,
    };
    let cap = 2 * e + 1;
    let (v, u) = dyadic_unit_part(f, alpha)?;
    if v % 2 == 1 {
        return Ok(LocalExtType::RamExt { rel_exp: cap });
    }
    let w = dyadic_defect(f, u, cap);
    Ok(if w >= cap {
        LocalExtType::SplitExt
    } else if w == 2 * e {
        LocalExtType::UnramExt
    } else {
        debug_assert!(w % 2 == 1, "defect below 2e must be odd");
        LocalExtType::RamExt { rel_exp: cap - w }
    })
}

/// Is alpha a square in the dyadic completion (2 non-split)?
pub fn dyadic_is_local_square(f: QuadraticField, alpha: FieldElement) -> Result<bool> {
    Ok(dyadic_ext_type(f, alpha)? == LocalExtType::SplitExt)
}

/// Exponent of 2 in Nm_{K/Q} of the relative discriminant of
/// K_P(sqrt(alpha))/K_P (2 non-split in K).
pub fn dyadic_nm_disc_exponent(f: QuadraticField, alpha: FieldElement) -> Result<u32> {
    let residue_degree = match splitting_in_quadratic(f.disc, 2) {
        PrimeSplit::Inert => 2,
        PrimeSplit::Ramified => 1,
        PrimeSplit::Split => return Err(Error::InvalidFactor("2 splits".into())),
    };
    Ok(match dyadic_ext_type(f, alpha)? {
        LocalExtType::RamExt { rel_exp } => residue_degree * rel_exp,
        _ => 0,
    })
}

// ---------------------------------------------------------------------------
// The sixteen square classes of a dyadic quadratic completion
// ---------------------------------------------------------------------------

/// A model of K_P^* / (K_P^*)^2 when 2 is inert or ramified in K: sixteen
/// classes indexed by bitmasks over a fixed basis, with Hilbert pairing,
/// conjugation action, and the type of the corresponding extension.
pub struct DyadicClassifier {
    pub field: QuadraticField,
    basis: Vec<FieldElement>,
    reps: Vec<FieldElement>,
    hilbert: Vec<Vec<i32>>,
    conj_map: Vec<usize>,
    ext_types: Vec<LocalExtType>,
    cache: RefCell<HashMap<(u8, i128, i128), usize>>,
    pi: FieldElement,
}

impl DyadicClassifier {
    pub fn new(field: QuadraticField) -> Result<Self> {
        let split = splitting_in_quadratic(field.disc, 2);
        if split == PrimeSplit::Split {
            return Err(Error::InvalidFactor(
                "2 splits; the dyadic classes are rational ones".into(),
            ));
        }
        let pi = match prime_ideal_above(field, 2)? {
            PrimeIdealData::Ramified(p) => FieldElement::from_omega_coords(field, p.b, 1),
            PrimeIdealData::Inert => FieldElement::from_rational(2),
            PrimeIdealData::Split(..) => unreachable!(),
        };
        // Greedy basis of the class group among small elements.
        let mut basis: Vec<FieldElement> = Vec::new();
        'pool: for y in 0..8i128 {
            for x in 0..8i128 {
                if (x, y) == (0, 0) {
                    continue;
                }
                let c = FieldElement::from_omega_coords(field, x, y);
                if c.norm(field) == 0 {
                    continue;
                }
                let mut independent = true;
                for mask in 0..(1usize << basis.len()) {
                    let mut prod = c;
                    for (i, b) in basis.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            prod = prod.mul(*b, field);
                        }
                    }
                    if dyadic_is_local_square(field, prod)? {
                        independent = false;
                        break;
                    }
                }
                if independent {
                    basis.push(c);
                    if basis.len() == 4 {
                        break 'pool;
                    }
                }
            }
        }
        assert_eq!(basis.len(), 4, "square-class group has sixteen elements");
        let reps: Vec<FieldElement> = (0..16)
            .map(|mask| {
                let mut prod = FieldElement::ONE;
                for (i, b) in basis.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        prod = prod.mul(*b, field);
                    }
                }
                prod
            })
            .collect();
        let mut c = DyadicClassifier {
            field,
            basis,
            reps,
            hilbert: vec![vec![1; 16]; 16],
            conj_map: vec![0; 16],
            ext_types: vec![LocalExtType::SplitExt; 16],
            cache: RefCell::new(HashMap::new()),
            pi,
        };
        for m in 0..16 {
            assert_eq!(c.class_id(c.reps[m])?, m, "representatives are distinct");
            c.ext_types[m] = dyadic_ext_type(field, c.reps[m])?;
            c.conj_map[m] = c.class_id(c.reps[m].conj())?;
        }
        // Hilbert pairing on the basis via norm groups, extended bilinearly.
        let mut hb = [[1i32; 4]; 4];
        for i in 0..4 {
            let norms = c.norm_class_ids(c.basis[i])?;
            assert_eq!(norms.len(), 8, "norm group has index 2");
            for j in 0..4 {
                hb[i][j] = if norms.contains(&(1usize << j)) { 1 } else { -1 };
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(hb[i][j], hb[j][i], "Hilbert pairing is symmetric");
            }
        }
        for m1 in 0..16 {
            for m2 in 0..16 {
                let mut sign = 1;
                for i in 0..4 {
                    for j in 0..4 {
                        if m1 >> i & 1 == 1 && m2 >> j & 1 == 1 {
                            sign *= hb[i][j];
                        }
                    }
                }
                c.hilbert[m1][m2] = sign;
            }
        }
        // Structural checks: one split class, one unramified class, and
        // (alpha, -alpha) = 1 throughout.
        let n_split = c.ext_types.iter().filter(|t| **t == LocalExtType::SplitExt).count();
        let n_unram = c.ext_types.iter().filter(|t| **t == LocalExtType::UnramExt).count();
        assert_eq!((n_split, n_unram), (1, 1), "local extension census");
        assert_eq!(c.ext_types[0], LocalExtType::SplitExt);
        for m in 0..16 {
            let neg = c.class_id(c.reps[m].neg())?;
            assert_eq!(c.hilbert[m][neg], 1, "(alpha, -alpha) = 1");
        }
        Ok(c)
    }

    /// Norm classes of K_P(sqrt(b))^* inside K_P^*/squares, as class ids.
    fn norm_class_ids(&self, b: FieldElement) -> Result<HashSet<usize>> {
        let f = self.field;
        let mut set = HashSet::new();
        for scan in [8i128, 16] {
            set.clear();
            for xx in 0..scan {
                for xy in 0..scan {
                    let xe = FieldElement::from_omega_coords(f, xx, xy);
                    let x2 = xe.mul(xe, f);
                    for yx in 0..scan {
                        for yy in 0..scan {
                            let ye = FieldElement::from_omega_coords(f, yx, yy);
                            let z = x2.add(b.mul(ye.mul(ye, f), f).neg());
                            if z.is_zero() || z.norm(f) == 0 {
                                continue;
                            }
                            if dyadic_valuation(f, z)? > 10 {
                                continue;
                            }
                            set.insert(self.class_id(z)?);
                        }
                    }
                }
            }
            if set.len() == 8 {
                break;
            }
        }
        Ok(set)
    }

    pub fn class_count(&self) -> usize {
        16
    }

    pub fn trivial_id(&self) -> usize {
        0
    }

    pub fn rep(&self, id: usize) -> FieldElement {
        self.reps[id]
    }

    /// Class ids form F_2^4 under xor.
    pub fn mul_id(&self, i: usize, j: usize) -> usize {
        i ^ j
    }

    pub fn hilbert_ids(&self, i: usize, j: usize) -> i32 {
        self.hilbert[i][j]
    }

    pub fn conj_id(&self, id: usize) -> usize {
        self.conj_map[id]
    }

    pub fn ext_type(&self, id: usize) -> LocalExtType {
        self.ext_types[id]
    }

    /// The square class of alpha, as an index into `reps`.
    pub fn class_id(&self, alpha: FieldElement) -> Result<usize> {
        let (v, u) = dyadic_unit_part(self.field, alpha)?;
        let key = ((v % 2) as u8, u.a, u.b);
        if let Some(&id) = self.cache.borrow().get(&key) {
            return Ok(id);
        }
        // Replace alpha by a small proxy in the same class before testing.
        let proxy = if v % 2 == 0 { u } else { u.mul(self.pi, self.field) };
        for id in 0..16 {
            if dyadic_is_local_square(self.field, proxy.mul(self.reps[id], self.field))? {
                self.cache.borrow_mut().insert(key, id);
                return Ok(id);
            }
        }
        Err(Error::InvalidElement("element has no square class".into()))
    }
}
