//! Elementary integer and modular arithmetic helpers.
//!
//! Everything here is deliberately dependency-light and works on machine
//! integers; big-integer work lives with its callers.

/// Greatest common divisor of two (possibly negative) i64s, always ≥ 0.
pub fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

/// Greatest common divisor of two (possibly negative) i128s, always ≥ 0.
pub fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i128
}

/// `(a * b) mod m` without overflow, for m < 2^63.
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `a^e mod m` by binary exponentiation.
pub fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin primality test, exact for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Kronecker symbol (a|n), the fully general extension of the Jacobi symbol.
pub fn kronecker(mut a: i64, mut n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let mut result = 1i32;
    // Strip factors of 2 from n, using (a|2) = 0, ±1 by a mod 8.
    let mut v = 0;
    while n % 2 == 0 {
        n /= 2;
        v += 1;
    }
    if v % 2 == 1 {
        // a is odd here: the even/even case returned 0 above.
        match a.rem_euclid(8) {
            1 | 7 => {}
            _ => result = -result,
        }
    }
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    // Now n is odd and positive: Jacobi symbol loop.
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            match n % 8 {
                3 | 5 => result = -result,
                _ => {}
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Legendre symbol (a|p) for odd prime p, via Euler's criterion.
pub fn legendre(a: i64, p: u64) -> i32 {
    debug_assert!(p > 2);
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    let e = powmod(a, (p - 1) / 2, p);
    if e == 1 {
        1
    } else {
        -1
    }
}

/// A square root of a modulo odd prime p (Tonelli–Shanks), if one exists.
pub fn sqrt_mod_p(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if legendre(a as i64, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(powmod(a, (p + 1) / 4, p));
    }
    // Tonelli–Shanks.
    let mut q = p - 1;
    let mut s = 0u32;
    while q & 1 == 0 {
        q >>= 1;
        s += 1;
    }
    let mut z = 2u64;
    while legendre(z as i64, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0u32;
        let mut tt = t;
        while tt != 1 {
            tt = mulmod(tt, tt, p);
            i += 1;
            if i == m {
                return None;
            }
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    Some(r)
}

/// Integer square root of n (floor).
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x > 0 && x.checked_mul(x).map_or(true, |s| s > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).map_or(false, |s| s <= n) {
        x += 1;
    }
    x
}

/// Integer square root of n (floor) for i128 inputs (n ≥ 0).
pub fn isqrt_i128(n: i128) -> i128 {
    debug_assert!(n >= 0);
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as i128;
    while x > 0 && x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Is n a perfect square? (n < 0 returns false.)
pub fn is_square_i64(n: i64) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt(n as u64);
    r * r == n as u64
}

/// All primes ≤ n, by sieve of Eratosthenes.
pub fn primes_upto(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2usize;
    while p * p <= n {
        if sieve[p] {
            let mut q = p * p;
            while q <= n {
                sieve[q] = false;
                q += p;
            }
        }
        p += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| if b { Some(i as u64) } else { None })
        .collect()
}

/// Smallest-prime-factor table for 0..=n (spf[0] = spf[1] = 0).
pub fn spf_table(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Factor n > 0 into (prime, exponent) pairs by trial division.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = vec![];
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Squarefree kernel (radical) and square part: n = rad_sign · s², returning
/// (squarefree part with sign, s). n must be nonzero.
pub fn squarefree_decompose(n: i64) -> (i64, i64) {
    debug_assert!(n != 0);
    let sign = n.signum();
    let mut sf = 1i64;
    let mut sq = 1i64;
    for (p, e) in factorize(n.unsigned_abs()) {
        if e % 2 == 1 {
            sf *= p as i64;
        }
        sq *= (p as i64).pow(e / 2);
    }
    (sign * sf, sq)
}

/// 2-adic valuation of a nonzero integer.
pub fn val2_i64(n: i64) -> u32 {
    debug_assert!(n != 0);
    n.trailing_zeros()
}

/// p-adic valuation of a nonzero i64.
pub fn valp_i64(mut n: i64, p: u64) -> u32 {
    debug_assert!(n != 0);
    let mut v = 0;
    while n % p as i64 == 0 {
        n /= p as i64;
        v += 1;
    }
    v
}

/// Möbius function of n ≥ 1.
pub fn moebius(n: u64) -> i32 {
    if n == 1 {
        return 1;
    }
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_basics() {
        // (8|3): 8 ≡ 2 mod 3, non-residue.
        assert_eq!(kronecker(8, 3), -1);
        // (a|2) by a mod 8.
        assert_eq!(kronecker(7, 2), 1);
        assert_eq!(kronecker(3, 2), -1);
        assert_eq!(kronecker(2, 2), 0);
        // (-4|p) distinguishes p mod 4.
        assert_eq!(kronecker(-4, 5), 1);
        assert_eq!(kronecker(-4, 7), -1);
        // Multiplicativity spot check.
        for a in -30i64..30 {
            for n in 1i64..30 {
                for m in 1i64..15 {
                    assert_eq!(
                        kronecker(a, n * m),
                        kronecker(a, n) * kronecker(a, m),
                        "a={a} n={n} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn kronecker_matches_legendre() {
        for &p in &[3u64, 5, 7, 11, 13, 17, 19, 23] {
            for a in -20i64..20 {
                assert_eq!(kronecker(a, p as i64), legendre(a, p), "a={a} p={p}");
            }
        }
    }

    #[test]
    fn sqrt_mod_p_works() {
        for &p in &[3u64, 5, 7, 11, 13, 17, 101, 997] {
            for a in 0..p {
                if let Some(r) = sqrt_mod_p(a, p) {
                    assert_eq!(mulmod(r, r, p), a % p);
                } else {
                    assert_eq!(legendre(a as i64, p), -1);
                }
            }
        }
    }

    #[test]
    fn primality_and_sieve_agree() {
        let ps = primes_upto(2000);
        for n in 0..2000u64 {
            assert_eq!(ps.contains(&n), is_prime(n), "n={n}");
        }
    }

    #[test]
    fn squarefree_decomposition() {
        assert_eq!(squarefree_decompose(12), (3, 2));
        assert_eq!(squarefree_decompose(-75), (-3, 5));
        assert_eq!(squarefree_decompose(1), (1, 1));
        assert_eq!(squarefree_decompose(-8), (-2, 2));
    }

    #[test]
    fn spf_factors() {
        let spf = spf_table(1000);
        for n in 2..=1000usize {
            let mut m = n;
            let mut prod = 1usize;
            while m > 1 {
                let p = spf[m] as usize;
                assert!(m % p == 0);
                prod *= p;
                while m % p == 0 {
                    m /= p;
                }
            }
            let rad: u64 = factorize(n as u64).iter().map(|&(p, _)| p).product();
            assert_eq!(prod as u64, rad);
        }
    }
}
