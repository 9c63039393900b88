//! Self-validated fixed-point interval arithmetic.
//!
//! A `Ball` stores an enclosure [mid - rad, mid + rad] / 2^FRAC_BITS with
//! bignum midpoint and radius.  All operations round outward, so any real
//! number enclosed by the inputs stays enclosed by the outputs; the Euler
//! products and zeta values built on top of this are rigorous up to the
//! reported radius.  192 fractional bits leave ample headroom above the
//! 10^-8 target accuracy of the headline constants.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub const FRAC_BITS: u32 = 192;

fn unit() -> BigInt {
    BigInt::from(1) << (FRAC_BITS as usize)
}

fn div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -(-a).div_floor(b)
}

/// An interval [mid - rad, mid + rad] scaled by 2^-FRAC_BITS.
#[derive(Clone, PartialEq, Eq)]
pub struct Ball {
    mid: BigInt,
    rad: BigInt,
}

impl Ball {
    pub fn zero() -> Ball {
        Ball { mid: BigInt::zero(), rad: BigInt::zero() }
    }

    pub fn one() -> Ball {
        Ball { mid: unit(), rad: BigInt::zero() }
    }

    pub fn from_i64(n: i64) -> Ball {
        Ball { mid: BigInt::from(n) << (FRAC_BITS as usize), rad: BigInt::zero() }
    }

    /// Exact rational input, outward-rounded to one unit in the last place.
    pub fn from_ratio(n: i64, d: i64) -> Ball {
        Self::from_big_ratio(&BigInt::from(n), &BigInt::from(d))
    }

    pub fn from_big_ratio(n: &BigInt, d: &BigInt) -> Ball {
        assert!(!d.is_zero(), "rational with zero denominator");
        let (n, d) = if d.is_negative() { (-n, -d) } else { (n.clone(), d.clone()) };
        let scaled = n << (FRAC_BITS as usize);
        let lo = div_floor(&scaled, &d);
        let hi = div_ceil(&scaled, &d);
        Ball::from_endpoints(lo, hi)
    }

    fn from_endpoints(lo: BigInt, hi: BigInt) -> Ball {
        debug_assert!(lo <= hi);
        let mid = div_floor(&(&lo + &hi), &BigInt::from(2));
        let rad = &hi - &mid;
        Ball { mid, rad }
    }

    fn endpoints(&self) -> (BigInt, BigInt) {
        (&self.mid - &self.rad, &self.mid + &self.rad)
    }

    /// Inflate the radius by 2^e (absolute); used to absorb truncation
    /// tails with a proven bound.
    pub fn with_error_2exp(mut self, e: i32) -> Ball {
        let sh = e + FRAC_BITS as i32;
        let bump = if sh <= 0 { BigInt::from(1) } else { BigInt::from(1) << sh as usize };
        self.rad += bump;
        self
    }

    pub fn is_positive(&self) -> bool {
        self.mid > self.rad
    }

    pub fn to_f64(&self) -> f64 {
        big_to_f64(&self.mid) / 2f64.powi(FRAC_BITS as i32)
    }

    pub fn rad_to_f64(&self) -> f64 {
        big_to_f64(&self.rad) / 2f64.powi(FRAC_BITS as i32)
    }

    /// Whether the enclosure lies within `tol` of `x`; the right check for
    /// anchors that are not exactly representable in binary.
    pub fn approx_f64(&self, x: f64, tol: f64) -> bool {
        (self.to_f64() - x).abs() <= tol + self.rad_to_f64()
    }

    /// Whether the exact dyadic value of `x` lies inside the enclosure.
    pub fn contains_f64(&self, x: f64) -> bool {
        let r = num_rational::BigRational::from_float(x).expect("finite float");
        let (lo, hi) = self.endpoints();
        let num = r.numer() << (FRAC_BITS as usize);
        let den = r.denom();
        debug_assert!(den.is_positive());
        lo * den <= num && num <= hi * den
    }

    pub fn pow_usize(&self, e: usize) -> Ball {
        let mut out = Ball::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn mul_i64(&self, n: i64) -> Ball {
        let n = BigInt::from(n);
        Ball { mid: &self.mid * &n, rad: &self.rad * n.abs() }
    }

    pub fn div_i64(&self, n: i64) -> Ball {
        self / &Ball::from_i64(n)
    }

    /// Square root, rounded outward; the enclosure must be nonnegative.
    pub fn sqrt(&self) -> Ball {
        let (lo, hi) = self.endpoints();
        assert!(!lo.is_negative(), "sqrt of a possibly negative enclosure");
        let s_lo = (lo << (FRAC_BITS as usize)).sqrt();
        let s_hi = (hi << (FRAC_BITS as usize)).sqrt() + 1;
        Ball::from_endpoints(s_lo, s_hi)
    }

    /// Natural logarithm, rounded outward; the enclosure must be positive.
    pub fn ln(&self) -> Ball {
        let (lo, hi) = self.endpoints();
        assert!(lo.is_positive(), "log of a possibly nonpositive enclosure");
        let (a_lo, s_lo) = ln_fix(&lo);
        let (a_hi, s_hi) = ln_fix(&hi);
        Ball::from_endpoints(a_lo - s_lo, a_hi + s_hi)
    }

    /// ln 2 as a ball.
    pub fn ln2() -> Ball {
        let (a, s) = ln2_fix();
        Ball::from_endpoints(&a - &s, &a + &s)
    }

    /// π as a ball, via Machin's formula 16 atan(1/5) - 4 atan(1/239).
    pub fn pi() -> Ball {
        let (a5, s5) = atan_inv_fix(5);
        let (a239, s239) = atan_inv_fix(239);
        let approx = a5 * 16 - a239 * 4;
        let slack = s5 * 16 + s239 * 4 + 8;
        Ball::from_endpoints(&approx - &slack, &approx + &slack)
    }

    /// Decimal rendering "d.ddd… ± r" with the radius in scientific form.
    pub fn decimal_string(&self, digits: usize) -> String {
        let scale = BigInt::from(10).pow(digits as u32);
        let val = div_floor(&(&self.mid * &scale), &unit());
        let neg = val.is_negative();
        let mag = val.magnitude().to_string();
        let mag = if mag.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - mag.len()), mag)
        } else {
            mag
        };
        let (int_part, frac_part) = mag.split_at(mag.len() - digits);
        let rad = self.rad_to_f64();
        let rad_str = if rad == 0.0 { format!("< 1e-{digits}") } else { format!("{rad:.2e}") };
        format!("{}{}.{} (± {})", if neg { "-" } else { "" }, int_part, frac_part, rad_str)
    }
}

fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

impl fmt::Debug for Ball {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "Ball({:.17} ± {:.2e})", self.to_f64(), self.rad_to_f64())
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "{}", self.decimal_string(30))
    }
}

impl Neg for &Ball {
    type Output = Ball;
    fn neg(self) -> Ball {
        Ball { mid: -&self.mid, rad: self.rad.clone() }
    }
}

impl Add for &Ball {
    type Output = Ball;
    fn add(self, o: &Ball) -> Ball {
        Ball { mid: &self.mid + &o.mid, rad: &self.rad + &o.rad }
    }
}

impl Sub for &Ball {
    type Output = Ball;
    fn sub(self, o: &Ball) -> Ball {
        Ball { mid: &self.mid - &o.mid, rad: &self.rad + &o.rad }
    }
}

impl Mul for &Ball {
    type Output = Ball;
    fn mul(self, o: &Ball) -> Ball {
        let (al, ah) = self.endpoints();
        let (bl, bh) = o.endpoints();
        let prods = [&al * &bl, &al * &bh, &ah * &bl, &ah * &bh];
        let lo = prods.iter().min().unwrap();
        let hi = prods.iter().max().unwrap();
        Ball::from_endpoints(
            div_floor(lo, &unit()),
            div_ceil(hi, &unit()),
        )
    }
}

impl Div for &Ball {
    type Output = Ball;
    fn div(self, o: &Ball) -> Ball {
        let (al, ah) = self.endpoints();
        let (bl, bh) = o.endpoints();
        assert!(
            bl.is_positive() || bh.is_negative(),
            "division by an enclosure containing zero"
        );
        let scale = |x: &BigInt| x << (FRAC_BITS as usize);
        let quots = [
            (scale(&al), &bl),
            (scale(&al), &bh),
            (scale(&ah), &bl),
            (scale(&ah), &bh),
        ];
        let lo = quots.iter().map(|(n, d)| div_floor(n, d)).min().unwrap();
        let hi = quots.iter().map(|(n, d)| div_ceil(n, d)).max().unwrap();
        Ball::from_endpoints(lo, hi)
    }
}

/// Fixed-point ln with explicit slack: returns (a, s) with
/// |ln(x / 2^F) - a / 2^F| <= s / 2^F.
fn ln_fix(x: &BigInt) -> (BigInt, BigInt) {
    assert!(x.is_positive());
    let e = unit();
    // normalize to m in [2^F, 2^{F+1})
    let k = x.bits() as i64 - (FRAC_BITS as i64 + 1);
    let (m, norm_slack) = if k >= 0 {
        // floor shift loses at most 2^-F relative accuracy: ln error <= 2 ulp
        (x >> (k as usize), BigInt::from(2))
    } else {
        (x << ((-k) as usize), BigInt::zero())
    };
    let (series, s_slack) = atanh_fix(&div_floor(&(&(&m - &e) << (FRAC_BITS as usize)), &(&m + &e)));
    let (l2, l2_slack) = ln2_fix();
    let approx = series * 2 + BigInt::from(k) * &l2;
    let slack = norm_slack + s_slack * 2 + BigInt::from(k.unsigned_abs()) * l2_slack + 4;
    (approx, slack)
}

/// atanh of a fixed-point t in [0, 1/3]; slack covers the truncated tail
/// and per-term rounding.
fn atanh_fix(t: &BigInt) -> (BigInt, BigInt) {
    debug_assert!(!t.is_negative());
    let tsq = div_floor(&(t * t), &unit());
    let mut sum = t.clone();
    let mut term = t.clone();
    let mut j = 1u32;
    let mut steps = 0u32;
    loop {
        term = div_floor(&(&term * &tsq), &unit());
        if term.is_zero() {
            break;
        }
        j += 2;
        sum += div_floor(&term, &BigInt::from(j));
        steps += 1;
        assert!(steps < 4096, "atanh series convergence");
    }
    // tail after term = 0 is below one ulp over a geometric ratio <= 1/9;
    // per-term floor rounding loses at most 2 ulp each
    (sum, BigInt::from(2 * steps + 4))
}

fn ln2_fix() -> (BigInt, BigInt) {
    // ln 2 = 2 atanh(1/3)
    let third = div_floor(&unit(), &BigInt::from(3));
    let (a, s) = atanh_fix(&third);
    (a * 2, s * 2 + 4)
}

/// atan(1/n) in fixed point with explicit slack, for integer n >= 2:
/// the alternating series sum_j (-1)^j / ((2j+1) n^(2j+1)).
fn atan_inv_fix(n: i64) -> (BigInt, BigInt) {
    debug_assert!(n >= 2);
    let nsq = BigInt::from(n) * n;
    // running power 1/n^(2j+1); floor rounding loses at most 1 ulp per step
    let mut pow = div_floor(&unit(), &BigInt::from(n));
    let mut sum = pow.clone();
    let mut j = 1u32;
    let mut steps = 0u32;
    loop {
        pow = div_floor(&pow, &nsq);
        if pow.is_zero() {
            break;
        }
        j += 2;
        let c = div_floor(&pow, &BigInt::from(j));
        if j % 4 == 1 {
            sum += c;
        } else {
            sum -= c;
        }
        steps += 1;
        assert!(steps < 4096, "atan series convergence");
    }
    // alternating tail after a zero term is below one ulp; per-term floor
    // rounding loses at most 2 ulp each
    (sum, BigInt::from(2 * steps + 6))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_arithmetic_encloses() {
        let a = Ball::from_ratio(1, 3);
        let b = Ball::from_ratio(1, 7);
        let c = &(&a + &b) * &Ball::from_i64(21);
        assert!(c.contains_f64(10.0));
        assert!(c.rad_to_f64() < 1e-50);
        let d = &Ball::from_ratio(1, 7) * &Ball::from_i64(7);
        assert!(d.contains_f64(1.0));
        let q = &Ball::from_i64(1) / &Ball::from_i64(3);
        assert!(q.contains_f64(1.0 / 3.0) || (q.to_f64() - 1.0 / 3.0).abs() < 1e-16);
        let neg = &Ball::from_i64(-10) / &Ball::from_i64(4);
        assert!(neg.contains_f64(-2.5));
    }

    #[test]
    fn sqrt_anchors() {
        let two = Ball::from_i64(2);
        let r = two.sqrt();
        assert!(r.approx_f64(1.4142135623730951, 1e-15));
        let sq = &r * &r;
        assert!(sq.contains_f64(2.0));
        assert!(sq.rad_to_f64() < 1e-50);
        let x = Ball::from_ratio(9, 4).sqrt();
        assert!(x.contains_f64(1.5));
    }

    #[test]
    fn ln_anchors() {
        assert!(Ball::ln2().approx_f64(0.6931471805599453, 1e-15));
        assert!(Ball::from_i64(10).ln().approx_f64(2.302585092994046, 1e-14));
        let one = Ball::from_i64(1).ln();
        assert!(one.contains_f64(0.0));
        assert!(one.rad_to_f64() < 1e-50);
        // ln is additive across enclosures
        let l6 = Ball::from_i64(6).ln();
        let split = &Ball::from_i64(2).ln() + &Ball::from_i64(3).ln();
        let diff = &l6 - &split;
        assert!(diff.contains_f64(0.0));
        // fractional argument below 1
        let lq = Ball::from_ratio(1, 4).ln();
        assert!(lq.approx_f64(-1.3862943611198906, 1e-14));
    }

    #[test]
    fn pi_anchor() {
        let pi = Ball::pi();
        assert!(pi.approx_f64(3.141592653589793, 1e-15), "{pi:?}");
        assert!(pi.rad_to_f64() < 1e-50);
        // π²/6 consistency with the known decimal
        let z2 = &(&pi * &pi) / &Ball::from_i64(6);
        assert!(z2.approx_f64(1.6449340668482264, 1e-14));
    }

    #[test]
    fn outward_rounding_keeps_enclosures() {
        // chain many operations and verify a known closed form stays inside
        let mut acc = Ball::one();
        for n in 2..=50i64 {
            // prod (1 - 1/n^2) = (n+1)/(2n) at each stage
            let f = &Ball::one() - &Ball::from_ratio(1, n * n);
            acc = &acc * &f;
        }
        assert!(acc.approx_f64(51.0 / 100.0, 1e-15));
        assert!(acc.rad_to_f64() < 1e-45);
    }

    #[test]
    fn error_inflation_and_sign_checks() {
        let x = Ball::from_i64(1).with_error_2exp(-10);
        assert!(x.contains_f64(1.0 + 2f64.powi(-11)));
        assert!(!x.contains_f64(1.01));
        assert!(x.is_positive());
        assert!(!Ball::from_i64(0).is_positive());
        let y = Ball::from_ratio(-3, 2);
        assert!((-&y).contains_f64(1.5));
    }

    #[test]
    fn decimal_rendering() {
        let x = Ball::from_ratio(355, 113);
        let s = x.decimal_string(12);
        assert!(s.starts_with("3.141592920353"), "{s}");
        let neg = Ball::from_ratio(-1, 8);
        assert!(neg.decimal_string(4).starts_with("-0.1250"));
        assert!(Ball::from_i64(0).decimal_string(4).starts_with("0.0000"));
    }

    #[test]
    fn pow_and_scalar_helpers() {
        let x = Ball::from_ratio(3, 2).pow_usize(4);
        assert!(x.contains_f64(81.0 / 16.0));
        assert!(Ball::from_ratio(5, 3).mul_i64(6).contains_f64(10.0));
        assert!(Ball::from_i64(7).div_i64(2).contains_f64(3.5));
    }
}
