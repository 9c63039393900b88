//! Rigorous numeric constants: truncated Euler products with proven tail
//! enclosures, Dirichlet L-values at s = 1 through the class number
//! formula, and the density predictions assembled from the local masses.
//!
//! Everything returns a [`Ball`], so every reported digit is backed by an
//! enclosure.  Truncation tails are *evaluated*, not merely bounded: for a
//! factor whose logarithm expands as Σ c_k p^{-k/2} + O(p^{-r/2}) the sum
//! over primes beyond the cutoff is computed from prime-zeta values
//! P(s) = Σ_j μ(j)/j · ln ζ(js), with ζ at real arguments evaluated by
//! Euler–Maclaurin summation.  Only the O-remainder widens the radius.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::arith::{factorize, isqrt, kronecker};
use crate::ball::Ball;
use crate::localmass::{
    archimedean_mass, enumerate_local_pairs, enumerate_local_pairs_2, local_mass, mass_flat,
    ArchSet, LocalEtalePairClass, MassValue, Rat, SelectorTok, SpecCollection,
};
use crate::qfield::{class_group, splitting_in_quadratic, PrimeSplit, QuadraticField};
use crate::{Error, Result};

fn rat(n: i128, d: i128) -> Rat {
    Rat::new(n, d)
}

fn rat_ball(r: Rat) -> Ball {
    Ball::from_big_ratio(&BigInt::from(*r.numer()), &BigInt::from(*r.denom()))
}

/// Inflate the radius of `b` by `bound` (a nonnegative f64 upper bound on
/// some absolute error); rounded up to a power of two with safety margin.
fn with_error_f64(b: Ball, bound: f64) -> Ball {
    if bound <= 0.0 {
        return b;
    }
    let e = (bound * 1.000001).log2().ceil() as i32 + 1;
    b.with_error_2exp(e)
}

/// A zero-centred ball whose radius covers every value of `b`; used to add
/// a symmetric error term of proven magnitude.
fn plus_minus(b: &Ball) -> Ball {
    let ub = b.to_f64().abs() + b.rad_to_f64();
    with_error_f64(Ball::zero(), ub * 1.000001)
}

/// exp on a small enclosure (|x| <= 1/2): quartic Taylor polynomial plus a
/// remainder radius |x|^5 e^{1/2}/120 <= |x|^5/72.
fn exp_small(x: &Ball) -> Result<Ball> {
    let ub = x.to_f64().abs() + x.rad_to_f64();
    if !(ub <= 0.5) {
        return Err(Error::BoundExceeded(format!(
            "exp argument {ub:.3e} outside the small-argument range"
        )));
    }
    let x2 = x * x;
    let x3 = &x2 * x;
    let x4 = &x2 * &x2;
    let mut out = &Ball::one() + x;
    out = &out + &x2.div_i64(2);
    out = &out + &x3.div_i64(6);
    out = &out + &x4.div_i64(24);
    Ok(with_error_f64(out, ub.powi(5) / 72.0))
}

fn prime_flags(limit: usize) -> Vec<bool> {
    let mut f = vec![true; limit + 1];
    f[0] = false;
    if limit >= 1 {
        f[1] = false;
    }
    let mut p = 2usize;
    while p * p <= limit {
        if f[p] {
            let mut q = p * p;
            while q <= limit {
                f[q] = false;
                q += p;
            }
        }
        p += 1;
    }
    f
}

fn moebius(n: u64) -> i64 {
    if n == 1 {
        return 1;
    }
    let fac = factorize(n);
    if fac.iter().any(|&(_, e)| e > 1) {
        return 0;
    }
    if fac.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

// ---------------------------------------------------------------------------
// Zeta and prime zeta at real half-integer arguments
// ---------------------------------------------------------------------------

/// Numerator/denominator pairs of the Bernoulli numbers B_2, B_4, …, B_30.
const BERNOULLI: [(i128, i128); 15] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
    (854513, 138),
    (-236364091, 2730),
    (8553103, 6),
    (-23749461029, 870),
    (8615841276005, 14322),
];

/// n^{-k/2} as a ball (n >= 1, k >= 1).
fn inv_power_half(n: u64, k: u32) -> Ball {
    let whole = BigInt::from(n).pow(k / 2);
    let e = Ball::from_big_ratio(&BigInt::from(1), &whole);
    if k % 2 == 1 {
        &e / &Ball::from_i64(n as i64).sqrt()
    } else {
        e
    }
}

/// ζ(k/2) for k >= 3, by Euler–Maclaurin at N = 64 with 14 Bernoulli
/// correction terms; for real positive arguments the remainder is bounded
/// by the first omitted correction term.  The boundary and correction
/// terms are exact rationals assembled with bignum arithmetic and rounded
/// to a ball once, so terms far below the fixed-point resolution cost one
/// ulp of radius instead of scaling with their coefficients.
fn zeta_half_uncached(k: u32) -> Ball {
    assert!(k >= 3, "zeta argument must exceed 1");
    const N: u64 = 64; // power of two, so N-powers are exact dyadics
    let mut sum = Ball::zero();
    for n in 1..N {
        sum = &sum + &inv_power_half(n, k);
    }
    let pow2 = |e: u32| BigInt::from(1) << e as usize;
    // N^{1-s}/(s-1) + N^{-s}/2 with s = k/2: 2^{7-3k}/(k-2) + 2^{-3k-1}
    let mut q = BigRational::new(BigInt::from(2), &pow2(3 * k - 6) * BigInt::from(k as i64 - 2))
        + BigRational::new(BigInt::from(1), pow2(3 * k + 1));
    // rising factorial (s)_{2i-1} accumulated across correction terms
    let mut rising = BigRational::new(BigInt::from(k), BigInt::from(2));
    let mut fact = BigInt::from(1);
    for (i, &(bn, bd)) in BERNOULLI.iter().enumerate() {
        let i = i as u32 + 1; // correction index, term uses B_{2i}
        fact *= BigInt::from(2 * i as i64 - 1) * BigInt::from(2 * i as i64);
        let term = BigRational::new(BigInt::from(bn), BigInt::from(bd) * &fact)
            * &rising
            * BigRational::new(BigInt::from(1), pow2(3 * k + 12 * i - 6));
        if i <= 14 {
            q += term;
            // extend (s)_{2i-1} to (s)_{2i+1}
            rising *= BigRational::new(BigInt::from(k as i64 + 4 * i as i64 - 2), BigInt::from(2));
            rising *= BigRational::new(BigInt::from(k as i64 + 4 * i as i64), BigInt::from(2));
        } else {
            // fifteenth term bounds the remainder
            sum = &sum + &plus_minus(&Ball::from_big_ratio(term.numer(), term.denom()));
        }
    }
    &sum + &Ball::from_big_ratio(q.numer(), q.denom())
}

thread_local! {
    static ZETA_CACHE: RefCell<BTreeMap<u32, Ball>> = RefCell::new(BTreeMap::new());
    static PRIME_ZETA_CACHE: RefCell<BTreeMap<u32, Ball>> = RefCell::new(BTreeMap::new());
}

fn zeta_half(k: u32) -> Ball {
    ZETA_CACHE.with(|c| {
        if let Some(z) = c.borrow().get(&k) {
            return z.clone();
        }
        let z = zeta_half_uncached(k);
        c.borrow_mut().insert(k, z.clone());
        z
    })
}

/// The prime zeta value P(k/2) = Σ_p p^{-k/2} for k >= 3, through
/// P(s) = Σ_{j>=1} μ(j)/j · ln ζ(js); terms with j·k/2 beyond 210 are
/// absorbed into the radius (ln ζ(x) < 2^{1-x}).
pub fn prime_zeta_half(k: u32) -> Ball {
    assert!(k >= 3);
    PRIME_ZETA_CACHE.with(|c| {
        if let Some(z) = c.borrow().get(&k) {
            return z.clone();
        }
        let mut acc = Ball::zero();
        let mut j = 1u32;
        while j * k < 420 {
            let mu = moebius(j as u64);
            if mu != 0 {
                let l = zeta_half(j * k).ln();
                acc = &acc + &l.mul_i64(mu).div_i64(j as i64);
            }
            j += 1;
        }
        let z = acc.with_error_2exp(-200);
        c.borrow_mut().insert(k, z.clone());
        z
    })
}

// ---------------------------------------------------------------------------
// Euler products with evaluated tails
// ---------------------------------------------------------------------------

/// Expansion data for the logarithm of a local factor, valid for primes
/// beyond `min_cutoff`:  ln f_p = Σ (k, c) c·p^{-k/2} + r_p  with
/// |r_p| <= rem_c · p^{-rem_k/2}.
pub struct TailModel {
    pub terms: Vec<(u32, Rat)>,
    pub rem_k: u32,
    pub rem_c: Rat,
    pub min_cutoff: u64,
}

impl TailModel {
    fn needed_ks(&self) -> Vec<u32> {
        let mut ks: BTreeSet<u32> = self.terms.iter().map(|&(k, _)| k).collect();
        ks.insert(self.rem_k);
        ks.into_iter().collect()
    }
}

/// An Euler product ∏_p f_p over primes `start <= p`, skipping `exclude`,
/// where f_p = rat + irr·p^{-1/2} is exact, with a proven log-expansion
/// for the tail beyond the evaluation cutoff.
pub struct EulerProductSpec {
    pub start: u64,
    pub exclude: Vec<u64>,
    pub factor: Box<dyn Fn(u64) -> MassValue>,
    pub tail: TailModel,
    pub label: &'static str,
}

impl EulerProductSpec {
    /// ∏_p (1 - 1/p²) = 1/ζ(2).
    pub fn zeta2_inverse() -> Self {
        EulerProductSpec {
            start: 2,
            exclude: vec![],
            factor: Box::new(|p| {
                let p = p as i128;
                MassValue::rational(rat(1, 1) - rat(1, p * p))
            }),
            // ln(1-x) = -x - x²/2 - … with x = p^{-2}
            tail: TailModel {
                terms: vec![(4, rat(-1, 1))],
                rem_k: 8,
                rem_c: rat(1, 1),
                min_cutoff: 2,
            },
            label: "1/zeta(2)",
        }
    }

    /// ∏_p (1 - 1/p³) = 1/ζ(3).
    pub fn zeta3_inverse() -> Self {
        EulerProductSpec {
            start: 2,
            exclude: vec![],
            factor: Box::new(|p| {
                let p = p as i128;
                MassValue::rational(rat(1, 1) - rat(1, p * p * p))
            }),
            tail: TailModel {
                terms: vec![(6, rat(-1, 1))],
                rem_k: 12,
                rem_c: rat(1, 1),
                min_cutoff: 2,
            },
            label: "1/zeta(3)",
        }
    }

    /// ∏_{p odd} (1 + 3/p + p^{-3/2})(1 - 1/p)³, the odd local-mass
    /// product of the quartic count.  With q = p^{-1/2} the factor is
    /// exactly 1 + q³ - 6q⁴ - 3q⁵ + 8q⁶ + 3q⁷ - 3q⁸ - q⁹, whence for
    /// p >= 11:  |ln f - q³ + 6q⁴| <= 8 q⁵.
    pub fn mass_weighted(exclude: Vec<u64>) -> Self {
        EulerProductSpec {
            start: 3,
            exclude,
            factor: Box::new(|p| {
                let p = p as i128;
                let om = rat(1, 1) - rat(1, p);
                let om3 = om * om * om;
                MassValue::new((rat(1, 1) + rat(3, p)) * om3, rat(1, p) * om3)
            }),
            tail: TailModel {
                terms: vec![(3, rat(1, 1)), (4, rat(-6, 1))],
                rem_k: 5,
                rem_c: rat(8, 1),
                min_cutoff: 11,
            },
            label: "mass-weighted product",
        }
    }

    /// ∏_{p odd} (1 + 3/p)(1 - 1/p)³, the flat (weight-dropped) product.
    /// The factor is exactly 1 - 6q⁴ + 8q⁶ - 3q⁸, whence for p >= 3:
    /// |ln f + 6q⁴| <= 20 q⁶.
    pub fn flat(exclude: Vec<u64>) -> Self {
        EulerProductSpec {
            start: 3,
            exclude,
            factor: Box::new(|p| {
                let p = p as i128;
                let om = rat(1, 1) - rat(1, p);
                MassValue::rational((rat(1, 1) + rat(3, p)) * om * om * om)
            }),
            tail: TailModel {
                terms: vec![(4, rat(-6, 1))],
                rem_k: 6,
                rem_c: rat(20, 1),
                min_cutoff: 3,
            },
            label: "flat product",
        }
    }
}

/// Evaluate ∏_{p <= cutoff} f_p exactly (in balls) and close the product
/// with the tail enclosure exp(Σ_{p > cutoff} ln f_p).
pub fn euler_product(spec: &EulerProductSpec, cutoff: u64) -> Result<Ball> {
    if cutoff < spec.start || cutoff < spec.tail.min_cutoff {
        return Err(Error::InvalidSpec(format!(
            "cutoff {cutoff} below the valid range of {}",
            spec.label
        )));
    }
    if let Some(&q) = spec.exclude.iter().find(|&&q| q > cutoff) {
        return Err(Error::InvalidSpec(format!(
            "excluded prime {q} beyond the cutoff {cutoff}"
        )));
    }
    let flags = prime_flags(cutoff as usize);
    let ks = spec.tail.needed_ks();
    let needs_rsqrt_tail = ks.iter().any(|k| k % 2 == 1);
    let mut partial: BTreeMap<u32, Ball> = ks.iter().map(|&k| (k, Ball::zero())).collect();
    let mut acc = Ball::one();
    for p in 2..=cutoff {
        if !flags[p as usize] {
            continue;
        }
        let in_range = p >= spec.start && !spec.exclude.contains(&p);
        if in_range {
            let mv = (spec.factor)(p);
            let irrational = !mv.irr.numer().is_zero();
            let rsq = if irrational || needs_rsqrt_tail {
                Some(&Ball::one() / &Ball::from_i64(p as i64).sqrt())
            } else {
                None
            };
            let mut fb = rat_ball(mv.rat);
            if irrational {
                fb = &fb + &(&rat_ball(mv.irr) * rsq.as_ref().unwrap());
            }
            if !fb.is_positive() {
                return Err(Error::InvalidFactor(format!(
                    "nonpositive local factor at p = {p} in {}",
                    spec.label
                )));
            }
            acc = &acc * &fb;
            for (&k, cur) in partial.iter_mut() {
                let term = if k % 2 == 1 {
                    &inv_power_half(p, k - 1) * rsq.as_ref().unwrap()
                } else {
                    inv_power_half(p, k)
                };
                *cur = &*cur + &term;
            }
        } else {
            // the tail sums Σ_{p > cutoff}; primes below start or excluded
            // are simply absent from the product, but every prime <= cutoff
            // must still enter the partial prime-zeta sums
            for (&k, cur) in partial.iter_mut() {
                *cur = &*cur + &inv_power_half(p, k);
            }
        }
    }
    let mut log_tail = Ball::zero();
    for &(k, c) in &spec.tail.terms {
        let t = &prime_zeta_half(k) - &partial[&k];
        log_tail = &log_tail + &(&rat_ball(c) * &t);
    }
    let t_rem = &prime_zeta_half(spec.tail.rem_k) - &partial[&spec.tail.rem_k];
    log_tail = &log_tail + &plus_minus(&(&rat_ball(spec.tail.rem_c) * &t_rem));
    Ok(&acc * &exp_small(&log_tail)?)
}

// ---------------------------------------------------------------------------
// Malle constants
// ---------------------------------------------------------------------------

/// An exact element (a + b√2)/den.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SqrtTwoForm {
    pub a: i64,
    pub b: i64,
    pub den: i64,
}

impl SqrtTwoForm {
    pub fn ball(&self) -> Ball {
        let num = &Ball::from_i64(self.a)
            + &Ball::from_i64(2).sqrt().mul_i64(self.b);
        num.div_i64(self.den)
    }
}

/// The leading constants of the quartic dihedral count by discriminant:
/// C_real X log²X real fields, C_complex X log²X complex fields, with
/// exact ℚ(√2) prefactors times the odd mass-weighted Euler product.
pub struct MalleConstants {
    pub prefactor_real: SqrtTwoForm,
    pub prefactor_complex: SqrtTwoForm,
    pub euler: Ball,
    pub c_real: Ball,
    pub c_complex: Ball,
}

pub fn malle_constants(cutoff: u64) -> Result<MalleConstants> {
    let euler = euler_product(&EulerProductSpec::mass_weighted(vec![]), cutoff)?;
    let prefactor_real = SqrtTwoForm { a: 56, b: 3, den: 256 };
    let prefactor_complex = SqrtTwoForm { a: 56, b: 3, den: 128 };
    let c_real = &prefactor_real.ball() * &euler;
    let c_complex = &prefactor_complex.ball() * &euler;
    Ok(MalleConstants { prefactor_real, prefactor_complex, euler, c_real, c_complex })
}

// ---------------------------------------------------------------------------
// Density constant from selected local types
// ---------------------------------------------------------------------------

/// A finite selection of local pair classes, one rule per listed place;
/// unlisted primes allow *all* classes (unlike a collection Λ, whose
/// default is the non-totally-ramified set).
#[derive(Clone, Debug, Default)]
pub struct TypeSelection {
    pub arch: ArchSet,
    pub finite: BTreeMap<u64, Vec<SelectorTok>>,
}

impl TypeSelection {
    pub fn all() -> Self {
        TypeSelection { arch: ArchSet::BOTH, finite: BTreeMap::new() }
    }

    pub fn with_rule(mut self, p: u64, toks: Vec<SelectorTok>) -> Self {
        self.finite.insert(p, toks);
        self
    }

    fn rows(&self, p: u64) -> Result<Vec<LocalEtalePairClass>> {
        match self.finite.get(&p) {
            None => {
                if p == 2 {
                    enumerate_local_pairs_2()
                } else {
                    enumerate_local_pairs(p)
                }
            }
            Some(toks) => {
                let mut rules = BTreeMap::new();
                rules.insert(p, toks.clone());
                SpecCollection { arch: ArchSet::BOTH, rules }.resolve(p)
            }
        }
    }
}

impl Default for ArchSet {
    fn default() -> Self {
        ArchSet::BOTH
    }
}

fn d4_multiplicity(rows: &[LocalEtalePairClass]) -> u32 {
    rows.iter().filter(|c| c.gal == Some("D4")).map(|c| c.multiplicity).sum()
}

/// The density constant (1/4)·(Σ_∞ 1/aut)·∏_p (1-1/p)³ Σ_p p^{-e/4}/aut
/// attached to a selection of local types: the leading coefficient of the
/// dihedral quartic count restricted to those types, in the normalization
/// where the count grows like X^{1/4} log²(X^{1/4}) of the closure
/// discriminant.  The dyadic selection must retain every D4-type class.
pub fn d4_density_constant(sel: &TypeSelection, cutoff: u64) -> Result<Ball> {
    let rows2 = sel.rows(2)?;
    let all2 = enumerate_local_pairs_2()?;
    if d4_multiplicity(&rows2) != d4_multiplicity(&all2) {
        return Err(Error::HypothesisViolated(
            "the dyadic class set must contain all D4-type classes".into(),
        ));
    }
    let mut special: BTreeSet<u64> = sel.finite.keys().copied().collect();
    special.insert(2);
    if let Some(&q) = special.iter().find(|&&q| q > cutoff) {
        return Err(Error::InvalidSpec(format!(
            "selected prime {q} beyond the cutoff {cutoff}"
        )));
    }
    let mut acc = rat_ball(archimedean_mass(sel.arch)?).div_i64(4);
    for &p in &special {
        let rows = sel.rows(p)?;
        let m = local_mass(p, &rows);
        let mut fb = rat_ball(m.rat);
        if !m.irr.numer().is_zero() {
            let rsq = &Ball::one() / &Ball::from_i64(p as i64).sqrt();
            fb = &fb + &(&rat_ball(m.irr) * &rsq);
        }
        let om = &Ball::one() - &Ball::from_ratio(1, p as i64);
        acc = &acc * &(&fb * &om.pow_usize(3));
    }
    let odd_special: Vec<u64> = special.iter().copied().filter(|&p| p != 2).collect();
    let generic = euler_product(&EulerProductSpec::mass_weighted(odd_special), cutoff)?;
    Ok(&acc * &generic)
}

/// Side-by-side report of the all-types density constant against the
/// Malle constants.  The density constant multiplies X^{1/4} log²(X^{1/4});
/// rescaling log²(X^{1/4}) = (1/16) log²X makes it comparable with
/// C_real + C_complex, and `ratio` records (C_real + C_complex) divided by
/// the rescaled constant — the normalization gap between the two counts,
/// reported without judgement.
pub struct DensityComparison {
    pub all_types: Ball,
    pub rescaled: Ball,
    pub malle_total: Ball,
    pub ratio: Ball,
}

pub fn density_vs_malle_report(cutoff: u64) -> Result<DensityComparison> {
    let all_types = d4_density_constant(&TypeSelection::all(), cutoff)?;
    let rescaled = all_types.div_i64(16);
    let mc = malle_constants(cutoff)?;
    let malle_total = &mc.c_real + &mc.c_complex;
    let ratio = &malle_total / &rescaled;
    Ok(DensityComparison { all_types, rescaled, malle_total, ratio })
}

// ---------------------------------------------------------------------------
// Dirichlet L(1, χ_d) by the class number formula
// ---------------------------------------------------------------------------

/// The regulator ln ε of the maximal order of positive fundamental
/// discriminant d, and whether the fundamental unit has norm -1.  The
/// continued fraction of (d mod 2 + √d)/2 enters the cycle of reduced
/// complete quotients; over one period their logarithms sum to ln ε, and
/// the norm sign is (-1)^(period length).
pub fn regulator(d: i64) -> Result<(Ball, bool)> {
    let f = QuadraticField::from_disc(d)?;
    if !f.is_real() {
        return Err(Error::InvalidField("regulator of an imaginary field".into()));
    }
    let s0 = d & 1;
    let fl = isqrt(d as u64) as i64;
    let sqrt_d = Ball::from_i64(d).sqrt();
    let (mut p_i, mut q_i) = (s0, 2i64);
    let mut states: Vec<(i64, i64)> = Vec::new();
    let mut reg = Ball::zero();
    let limit = 60 * fl as usize + 600;
    for step in 0..=limit {
        // a = floor((p + √d)/q) for q > 0, exact since √d is irrational
        let a = (p_i + fl).div_euclid(q_i);
        let p_next = a * q_i - p_i;
        let q_next = (d - p_next * p_next) / q_i;
        debug_assert_eq!(q_i * q_next, d - p_next * p_next, "state invariant");
        p_i = p_next;
        q_i = q_next;
        debug_assert!(q_i > 0, "complete quotients stay positive");
        if step == limit {
            break;
        }
        if let Some(pos) = states.iter().position(|&s| s == (p_i, q_i)) {
            // one full period: states[pos..] lists the cycle
            let cycle = &states[pos..];
            for &(cp, cq) in cycle {
                let alpha = &(&Ball::from_i64(cp) + &sqrt_d) / &Ball::from_i64(cq);
                reg = &reg + &alpha.ln();
            }
            return Ok((reg, cycle.len() % 2 == 1));
        }
        states.push((p_i, q_i));
    }
    Err(Error::BoundExceeded(format!("continued fraction of disc {d} did not close")))
}

/// L(1, χ_d) for a fundamental discriminant d, by the class number
/// formula: 2π h / (w √|d|) for d < 0, and h⁺ R⁺ / √d for d > 0 with h⁺
/// the narrow class number and R⁺ the totally positive regulator.
pub fn dirichlet_l1(d: i64) -> Result<Ball> {
    let _ = QuadraticField::from_disc(d)?;
    let cg = class_group(d)?;
    if d < 0 {
        let w = match d {
            -3 => 6,
            -4 => 4,
            _ => 2,
        };
        let num = Ball::pi().mul_i64(2 * cg.wide_order as i64);
        Ok(&num / &Ball::from_i64(-d).sqrt().mul_i64(w))
    } else {
        let (reg, norm_minus) = regulator(d)?;
        let r_plus = if norm_minus { reg.mul_i64(2) } else { reg };
        let num = r_plus.mul_i64(cg.narrow_order as i64);
        Ok(&num / &Ball::from_i64(d).sqrt())
    }
}

// ---------------------------------------------------------------------------
// Residue of the double series at the trivial class
// ---------------------------------------------------------------------------

/// The exact local factor (1 - 1/p)²·D_p(1,1) of the double-series residue
/// over the field of discriminant d: D_p = 1 + 3/p when p splits,
/// 1 + 1/p when p is inert, and 1 at the places of S(Λ) and the odd
/// ramified places (where the series carries no Euler factor).
pub fn residue_local_factor(d: i64, lambda: &SpecCollection, p: u64) -> Result<Rat> {
    let _ = QuadraticField::from_disc(d)?;
    let pi = p as i128;
    let om = rat(1, 1) - rat(1, pi);
    let mut in_s = p == 2 || lambda.odd_s_primes()?.contains(&p);
    if !in_s && p != 2 && d.rem_euclid(p as i64) == 0 {
        in_s = true; // odd ramified: no series factor either
    }
    if in_s {
        return Ok(om * om);
    }
    Ok(match splitting_in_quadratic(d, p) {
        PrimeSplit::Split => om * om * (rat(1, 1) + rat(3, pi)),
        PrimeSplit::Inert => om * om * (rat(1, 1) + rat(1, pi)),
        PrimeSplit::Ramified => om * om,
    })
}

/// The squared residue at s = t = 1 of the double Dirichlet series of the
/// trivial square class over K = ℚ(√d): the conditionally convergent
/// product ∏_p (1-1/p)² D_p(1,1) evaluated by factoring out L(1, χ_d)
/// (class number formula) so that the leftover product converges
/// absolutely, with its tail beyond the cutoff enclosed rigorously.
pub fn double_series_residue(d: i64, lambda: &SpecCollection, cutoff: u64) -> Result<Ball> {
    let _ = QuadraticField::from_disc(d)?;
    lambda.validate()?;
    if cutoff < 100 {
        return Err(Error::InvalidSpec("residue cutoff below 100".into()));
    }
    let s_odd = lambda.odd_s_primes()?;
    let mut off_series: BTreeSet<u64> = s_odd.iter().copied().collect();
    off_series.insert(2);
    for &(q, _) in factorize(d.unsigned_abs()).iter() {
        if q != 2 {
            off_series.insert(q);
        }
    }
    if let Some(&q) = off_series.iter().find(|&&q| q > cutoff) {
        return Err(Error::InvalidSpec(format!("place {q} beyond the cutoff")));
    }
    // L(1, χ_d) · ∏_{p ∈ S ∪ ram} (1-1/p)² · ∏_{p ∈ S, p∤d} (1 - χ(p)/p)
    // · ∏_{p ≤ cutoff unramified, p ∉ S} g_p, with
    //   split: g = (1-1/p)³(1+3/p),  inert: g = (1-1/p²)²,
    // so that g_p = (1 - χ(p)/p)·(1-1/p)²·D_p and |ln g_p| <= 13/p².
    let mut acc = dirichlet_l1(d)?;
    let mut exact = rat(1, 1);
    for &p in &off_series {
        let pi = p as i128;
        let om = rat(1, 1) - rat(1, pi);
        exact = exact * om * om;
        let in_s = p == 2 || s_odd.contains(&p);
        if in_s && d.rem_euclid(p as i64) != 0 {
            let chi = kronecker(d, p as i64) as i128;
            exact = exact * (rat(1, 1) - rat(chi, pi));
        }
    }
    acc = &acc * &rat_ball(exact);
    let flags = prime_flags(cutoff as usize);
    let mut partial4 = Ball::zero();
    for p in 2..=cutoff {
        if !flags[p as usize] {
            continue;
        }
        partial4 = &partial4 + &inv_power_half(p, 4);
        if off_series.contains(&p) {
            continue;
        }
        let pi = p as i128;
        let om = rat(1, 1) - rat(1, pi);
        let g = match splitting_in_quadratic(d, p) {
            PrimeSplit::Split => om * om * om * (rat(1, 1) + rat(3, pi)),
            PrimeSplit::Inert => {
                let w = rat(1, 1) - rat(1, pi * pi);
                w * w
            }
            PrimeSplit::Ramified => unreachable!("ramified primes are off the series"),
        };
        acc = &acc * &rat_ball(g);
    }
    let t4 = &prime_zeta_half(4) - &partial4;
    let log_tail = plus_minus(&t4.mul_i64(13));
    Ok(&acc * &exp_small(&log_tail)?)
}

// ---------------------------------------------------------------------------
// Flat-mass prediction for the pair count
// ---------------------------------------------------------------------------

/// The predicted number of quadratic-over-quadratic pairs of the
/// collection Λ with S-height up to X:
/// (1/4)·Mass♭(Λ)·∏_{p ∉ S(Λ)} (1+3/p)(1-1/p)³ · X log²X.
pub fn pair_count_prediction(lambda: &SpecCollection, x: u64, cutoff: u64) -> Result<Ball> {
    if x < 2 {
        return Err(Error::InvalidSpec("prediction needs X >= 2".into()));
    }
    let m = mass_flat(lambda)?;
    let prod = euler_product(&EulerProductSpec::flat(lambda.odd_s_primes()?), cutoff)?;
    let xb = Ball::from_i64(x as i64);
    let lx = xb.ln();
    let main = &(&xb * &lx) * &lx;
    Ok(&(&rat_ball(m).div_i64(4) * &prod) * &main)
}

// ---------------------------------------------------------------------------
// Average of B·residue over a discriminant window
// ---------------------------------------------------------------------------

/// The constant B_Λ(K) evaluated at the trivial square class, through the
/// resolved local tables: per place of ℚ under S(Λ) ∪ {∞}, the number of
/// allowed extension classes of the completion lying over the base shape
/// of K, divided by 2^(places of K above).  Matches the general B
/// evaluation specialized to α = 1.
///
/// A table row groups `mult` orbits of the 2-element automorphism group
/// of the base algebra acting on extension classes, aggregated over every
/// base algebra sharing the row's label; each orbit holds
/// 2·|Aut base| / |Aut(pair)| classes, so the class count over one fixed
/// base is 4 Σ mult / aut divided by the number of bases under the label.
pub fn trivial_class_b(lambda: &SpecCollection, d: i64) -> Result<Rat> {
    let f = QuadraticField::from_disc(d)?;
    lambda.validate()?;
    let mut b = if f.is_real() {
        let num = if lambda.arch.real { 1 } else { 0 } + if lambda.arch.complex { 3 } else { 0 };
        rat(num, 4)
    } else {
        rat(if lambda.arch.complex { 1 } else { 0 }, 2)
    };
    let mut s_finite = vec![2u64];
    s_finite.extend(lambda.odd_s_primes()?);
    for p in s_finite {
        if b.numer() == &0 {
            return Ok(rat(0, 1));
        }
        let rows = lambda.resolve(p)?;
        let (label, places) = base_shape(d, p);
        let classes: Rat = rows
            .iter()
            .filter(|c| c.base == label)
            .map(|c| rat(4 * c.multiplicity as i128, c.aut_order as i128))
            .sum();
        b = b * classes * rat(1, (1i128 << places) * bases_under_label(label, p));
    }
    Ok(b)
}

/// The splitting shape label of ℚ(√d) at p, with the number of places
/// above p.
fn base_shape(d: i64, p: u64) -> (&'static str, u32) {
    match splitting_in_quadratic(d, p) {
        PrimeSplit::Split => ("11", 2),
        PrimeSplit::Inert => ("2", 1),
        PrimeSplit::Ramified => {
            if p == 2 {
                if d % 8 == 0 {
                    ("1^2_3", 1)
                } else {
                    ("1^2_2", 1)
                }
            } else {
                ("1^2", 1)
            }
        }
    }
}

/// Number of isomorphism classes of quadratic étale algebras over ℚ_p
/// sharing a base label (ramified labels cover several twists).
fn bases_under_label(label: &str, p: u64) -> i128 {
    match label {
        "11" | "2" => 1,
        "1^2" => {
            debug_assert!(p % 2 == 1);
            2
        }
        "1^2_2" => 2,
        "1^2_3" => 4,
        other => panic!("unknown base label {other}"),
    }
}

pub struct ResidueAverageReport {
    pub window: (u64, u64),
    pub field_count: usize,
    pub empirical_sum: Ball,
    pub empirical_mean: Ball,
    pub predicted_limit: Ball,
}

/// Empirical average of B_Λ(K)·Res² over the fundamental discriminants
/// whose S(Λ)-stripped absolute value lies in [y_lo, y_hi], next to the
/// predicted density limit (1/2)·Mass♭(Λ)·∏_{p∉S}(1+3/p)(1-1/p)³.  Both
/// numbers are reported; no verdict is attached — the window average
/// converges only as the window grows.
pub fn residue_average_report(
    lambda: &SpecCollection,
    y_lo: u64,
    y_hi: u64,
    cutoff: u64,
) -> Result<ResidueAverageReport> {
    if y_lo >= y_hi {
        return Err(Error::InvalidSpec("empty discriminant window".into()));
    }
    lambda.validate()?;
    let mut s_finite = vec![2u64];
    s_finite.extend(lambda.odd_s_primes()?);
    let mut stretch: u64 = 8;
    for &p in &s_finite {
        if p != 2 {
            stretch = stretch.saturating_mul(p);
        }
    }
    let bound = y_hi.saturating_mul(stretch);
    if bound > 2_000_000 {
        return Err(Error::BoundExceeded(format!(
            "window requires scanning discriminants up to {bound}"
        )));
    }
    let strip = |mut m: u64| {
        for &p in &s_finite {
            while m % p == 0 {
                m /= p;
            }
        }
        m
    };
    let mut count = 0usize;
    let mut sum = Ball::zero();
    for a in 3..=bound {
        for d in [a as i64, -(a as i64)] {
            if QuadraticField::from_disc(d).is_err() {
                continue;
            }
            let s = strip(a);
            if s < y_lo || s > y_hi {
                continue;
            }
            count += 1;
            let b = trivial_class_b(lambda, d)?;
            if b.numer() != &0 {
                let res = double_series_residue(d, lambda, cutoff)?;
                sum = &sum + &(&rat_ball(b) * &res);
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidSpec("window contains no fundamental discriminant".into()));
    }
    let mean = sum.div_i64(count as i64);
    let prod = euler_product(&EulerProductSpec::flat(lambda.odd_s_primes()?), cutoff)?;
    let predicted = &rat_ball(mass_flat(lambda)?).div_i64(2) * &prod;
    Ok(ResidueAverageReport {
        window: (y_lo, y_hi),
        field_count: count,
        empirical_sum: sum,
        empirical_mean: mean,
        predicted_limit: predicted,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charcount::{b_constant, battery_collections};
    use crate::localmass::parse_spec_text;
    use crate::qfield::FieldElement;

    #[test]
    fn zeta_anchors() {
        assert!(zeta_half(3).approx_f64(2.612375348685488, 1e-12), "{:?}", zeta_half(3));
        assert!(zeta_half(4).approx_f64(1.6449340668482264, 1e-13));
        assert!(zeta_half(5).approx_f64(1.3414872572509171, 1e-12));
        assert!(zeta_half(6).approx_f64(1.2020569031595943, 1e-13));
        for k in [3u32, 4, 6, 12] {
            assert!(zeta_half(k).rad_to_f64() < 1e-40, "wide radius at k = {k}");
        }
    }

    #[test]
    fn prime_zeta_consistency() {
        // P(2) against a direct partial sum with the standard tail bound
        let flags = prime_flags(100_000);
        let mut partial = 0.0f64;
        for p in 2..=100_000u64 {
            if flags[p as usize] {
                partial += 1.0 / (p as f64 * p as f64);
            }
        }
        let pz = prime_zeta_half(4);
        let v = pz.to_f64();
        assert!(v > partial && v < partial + 2.0 / 99_999.0, "{v} vs {partial}");
        assert!(pz.rad_to_f64() < 1e-40);
        // monotone decrease in the argument
        assert!(prime_zeta_half(3).to_f64() > v);
        assert!(prime_zeta_half(5).to_f64() < v);
    }

    #[test]
    fn tail_models_hold_on_sample() {
        let specs = [
            EulerProductSpec::zeta2_inverse(),
            EulerProductSpec::zeta3_inverse(),
            EulerProductSpec::mass_weighted(vec![]),
            EulerProductSpec::flat(vec![]),
        ];
        for spec in &specs {
            for p in [13u64, 101, 1009] {
                let mv = (spec.factor)(p);
                let rsq = &Ball::one() / &Ball::from_i64(p as i64).sqrt();
                let fb = &rat_ball(mv.rat) + &(&rat_ball(mv.irr) * &rsq);
                let mut expect = Ball::zero();
                for &(k, c) in &spec.tail.terms {
                    expect = &expect + &(&rat_ball(c) * &inv_power_half(p, k));
                }
                let err = &fb.ln() - &expect;
                let bound = &rat_ball(spec.tail.rem_c) * &inv_power_half(p, spec.tail.rem_k);
                let lhs = err.to_f64().abs() + err.rad_to_f64();
                let rhs = bound.to_f64() - bound.rad_to_f64();
                assert!(lhs <= rhs, "{} tail model fails at p = {p}: {lhs} > {rhs}", spec.label);
            }
        }
    }

    #[test]
    fn euler_product_calibration() {
        let z2 = euler_product(&EulerProductSpec::zeta2_inverse(), 1_000_000).unwrap();
        assert!(z2.approx_f64(0.6079271018540266, 1e-10), "{z2:?}");
        assert!(z2.rad_to_f64() < 1e-10);
        let z3 = euler_product(&EulerProductSpec::zeta3_inverse(), 100_000).unwrap();
        assert!(z3.approx_f64(0.8319073725807075, 1e-10), "{z3:?}");
    }

    #[test]
    fn euler_product_radius_shrinks_and_values_agree() {
        let spec = EulerProductSpec::mass_weighted(vec![]);
        let coarse = euler_product(&spec, 200).unwrap();
        let fine = euler_product(&spec, 20_000).unwrap();
        assert!(fine.rad_to_f64() < coarse.rad_to_f64());
        // both enclose the same number
        let gap = (coarse.to_f64() - fine.to_f64()).abs();
        assert!(gap <= coarse.rad_to_f64() + fine.rad_to_f64(), "gap {gap}");
    }

    #[test]
    fn partial_products_monotone() {
        // the flat factor 1 - 6q^4 + 8q^6 - 3q^8 (q = p^{-1/2}) is < 1 at
        // every prime, so flat partial products strictly decrease ...
        let flat = EulerProductSpec::flat(vec![]);
        let partial = |spec: &EulerProductSpec, cutoff: u64| {
            let flags = prime_flags(cutoff as usize);
            let mut prod = 1.0f64;
            for p in 3..=cutoff {
                if flags[p as usize] {
                    prod *= (spec.factor)(p).to_f64(p);
                }
            }
            prod
        };
        let mut prev = f64::INFINITY;
        for cutoff in [11u64, 101, 1009, 10_007] {
            let prod = partial(&flat, cutoff);
            assert!(prod < prev);
            prev = prod;
        }
        // ... while the mass-weighted factor 1 + q^3 - 6q^4 - ... crosses 1
        // near p = 36, so its partial products climb once past the small primes
        let mw = EulerProductSpec::mass_weighted(vec![]);
        assert!((mw.factor)(31).to_f64(31) < 1.0);
        assert!((mw.factor)(37).to_f64(37) > 1.0);
        let mut prev = 0.0f64;
        for cutoff in [101u64, 1009, 10_007] {
            let prod = partial(&mw, cutoff);
            assert!(prod > prev);
            prev = prod;
        }
    }

    #[test]
    fn invalid_factor_and_cutoff_errors() {
        let bad = EulerProductSpec {
            start: 2,
            exclude: vec![],
            factor: Box::new(|p| MassValue::rational(rat(1, 1) - rat(3, p as i128))),
            tail: TailModel { terms: vec![], rem_k: 4, rem_c: rat(1, 1), min_cutoff: 2 },
            label: "bad",
        };
        assert!(matches!(euler_product(&bad, 1000), Err(Error::InvalidFactor(_))));
        let spec = EulerProductSpec::mass_weighted(vec![]);
        assert!(matches!(euler_product(&spec, 7), Err(Error::InvalidSpec(_))));
        let spec = EulerProductSpec::flat(vec![101]);
        assert!(matches!(euler_product(&spec, 50), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn malle_constant_shape() {
        let mc = malle_constants(20_000).unwrap();
        assert_eq!(mc.prefactor_real, SqrtTwoForm { a: 56, b: 3, den: 256 });
        assert_eq!(mc.prefactor_complex, SqrtTwoForm { a: 56, b: 3, den: 128 });
        // the complex constant is exactly twice the real one
        let twice = mc.c_real.mul_i64(2);
        let gap = (twice.to_f64() - mc.c_complex.to_f64()).abs();
        assert!(gap <= twice.rad_to_f64() + mc.c_complex.rad_to_f64());
        assert!(mc.c_real.is_positive());
        assert!(mc.prefactor_real.ball().approx_f64((56.0 + 3.0 * 2f64.sqrt()) / 256.0, 1e-15));
        assert!(mc.euler.to_f64() < 1.0 && mc.euler.to_f64() > 0.2);
    }

    #[test]
    fn density_constant_additivity_and_completeness() {
        let whole = d4_density_constant(&TypeSelection::all(), 2000).unwrap();
        let tr = d4_density_constant(
            &TypeSelection::all().with_rule(3, vec![SelectorTok::Tr]),
            2000,
        )
        .unwrap();
        let ntr = d4_density_constant(
            &TypeSelection::all().with_rule(3, vec![SelectorTok::Ntr]),
            2000,
        )
        .unwrap();
        let sum = &tr + &ntr;
        let gap = (sum.to_f64() - whole.to_f64()).abs();
        assert!(gap <= sum.rad_to_f64() + whole.rad_to_f64(), "additivity gap {gap}");
        // an explicit all-classes rule at 3 must agree with the closed form
        let explicit = d4_density_constant(
            &TypeSelection::all().with_rule(3, vec![SelectorTok::Ntr, SelectorTok::Tr]),
            2000,
        )
        .unwrap();
        let gap = (explicit.to_f64() - whole.to_f64()).abs();
        assert!(gap <= explicit.rad_to_f64() + whole.rad_to_f64());
        // dropping dyadic totally ramified classes loses D4 types
        let err = d4_density_constant(
            &TypeSelection::all().with_rule(2, vec![SelectorTok::Ntr]),
            2000,
        );
        assert!(matches!(err, Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn regulator_anchors() {
        let cases = [
            (5i64, 0.4812118250596035, true),
            (8, 0.8813735870195430, true),
            (12, 1.3169578969248166, false),
            (13, 1.1947632172871094, true),
            (17, 2.0947125472611012, true),
            (21, 1.5667992369724111, false),
        ];
        for &(d, r, minus) in &cases {
            let (reg, m) = regulator(d).unwrap();
            assert!(reg.approx_f64(r, 1e-12), "disc {d}: {reg:?}");
            assert_eq!(m, minus, "norm sign at disc {d}");
        }
        assert!(regulator(-4).is_err());
    }

    #[test]
    fn dirichlet_l_anchors() {
        let cases = [
            (5i64, 0.4304089409640040),
            (8, 0.6232252401402305),
            (12, 0.7603459963009463),
            (13, 0.6627353910718456),
            (-3, 0.6045997880780726),
            (-4, 0.7853981633974483),
            (-7, 1.1874104117237259),
            (-8, 1.1107207345395915),
            (-20, 1.4049629462081452),
        ];
        for &(d, v) in &cases {
            let l = dirichlet_l1(d).unwrap();
            assert!(l.approx_f64(v, 1e-10), "disc {d}: {l:?} vs {v}");
        }
    }

    #[test]
    fn residue_local_factor_forms() {
        let lambda = SpecCollection::all_ntr();
        // over ℚ(√5): 11 splits, 3 is inert, 2 ∈ S, 5 ramifies
        let f = |p: u64| residue_local_factor(5, &lambda, p).unwrap();
        assert_eq!(f(11), rat(10, 11) * rat(10, 11) * rat(14, 11));
        assert_eq!(f(3), rat(2, 3) * rat(2, 3) * rat(4, 3));
        assert_eq!(f(2), rat(1, 4));
        assert_eq!(f(5), rat(4, 5) * rat(4, 5));
        // an odd prime with a non-default rule is off the series
        let wide = parse_spec_text("p=3 allow=ntr,tr").unwrap();
        assert_eq!(residue_local_factor(5, &wide, 3).unwrap(), rat(4, 9));
    }

    #[test]
    fn residue_matches_direct_truncation() {
        let lambda = SpecCollection::all_ntr();
        for d in [5i64, -4, 13] {
            let res = double_series_residue(d, &lambda, 2000).unwrap();
            let flags = prime_flags(300_000);
            let mut direct = 1.0f64;
            for p in 2..=300_000u64 {
                if flags[p as usize] {
                    let r = residue_local_factor(d, &lambda, p).unwrap();
                    direct *= *r.numer() as f64 / *r.denom() as f64;
                }
            }
            let gap = (res.to_f64() - direct).abs();
            assert!(gap < 5e-3, "disc {d}: enclosure {res:?} vs direct {direct}");
        }
    }

    #[test]
    fn trivial_b_matches_general_b() {
        let mut lambdas: Vec<SpecCollection> =
            battery_collections().into_iter().map(|(_, l)| l).collect();
        lambdas.push(parse_spec_text("p=3 allow=ntr,tr\np=5 allow=ntr,tr").unwrap());
        lambdas.push(parse_spec_text("infty allow=complex").unwrap());
        for lambda in &lambdas {
            for d in [5i64, 8, 12, 13, 17, 21, 24, 28, -3, -4, -7, -8, -20, -24] {
                let fast = trivial_class_b(lambda, d).unwrap();
                let f = QuadraticField::from_disc(d).unwrap();
                let slow = b_constant(lambda, f, FieldElement::ONE).unwrap();
                assert_eq!(fast, slow, "disc {d}");
            }
        }
    }

    #[test]
    fn prediction_scaling_and_linearity() {
        let lambda = SpecCollection::all_ntr();
        let v1 = pair_count_prediction(&lambda, 1000, 500).unwrap();
        let v2 = pair_count_prediction(&lambda, 2000, 500).unwrap();
        // v2/v1 = 2 (ln 2000 / ln 1000)²
        let ratio = &v2 / &v1;
        let expect = {
            let l2 = Ball::from_i64(2000).ln();
            let l1 = Ball::from_i64(1000).ln();
            let q = &l2 / &l1;
            (&q * &q).mul_i64(2)
        };
        let gap = (ratio.to_f64() - expect.to_f64()).abs();
        assert!(gap <= ratio.rad_to_f64() + expect.rad_to_f64());
        // halving the archimedean mass scales the prediction linearly
        let real_only = parse_spec_text("infty allow=real").unwrap();
        let vr = pair_count_prediction(&real_only, 1000, 500).unwrap();
        let scaled = &v1 * &rat_ball(rat(1, 3));
        let gap = (vr.to_f64() - scaled.to_f64()).abs();
        assert!(gap <= vr.rad_to_f64() + scaled.rad_to_f64() + 1e-12);
        assert!(pair_count_prediction(&lambda, 1, 500).is_err());
    }

    #[test]
    fn average_report_runs_and_degenerate_window_fails() {
        let lambda = SpecCollection::all_ntr();
        assert!(matches!(
            residue_average_report(&lambda, 50, 50, 300),
            Err(Error::InvalidSpec(_))
        ));
        let rep = residue_average_report(&lambda, 20, 60, 300).unwrap();
        assert!(rep.field_count >= 15, "only {} fields", rep.field_count);
        assert!(rep.empirical_mean.is_positive());
        assert!(rep.predicted_limit.is_positive());
        let mean_from_sum = rep.empirical_sum.div_i64(rep.field_count as i64);
        let gap = (mean_from_sum.to_f64() - rep.empirical_mean.to_f64()).abs();
        assert!(gap < 1e-12);
    }
}
