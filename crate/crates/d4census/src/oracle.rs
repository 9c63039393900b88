//! Independent cross-check implementations used to validate the main library:
//! maximal-order discriminants by iterated order enlargement, quartic Galois
//! groups via the cubic resolvent, splitting types by distinct-degree
//! factorization, and a brute-force classification of tame dihedral
//! permutation data.
//!
//! Nothing here shares code with the quadratic-tower machinery; agreement
//! between the two sides is what the test suite certifies.

use crate::arith::{factorize, is_prime};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashSet;

// ---------------------------------------------------------------------------
// Integer polynomial discriminants (Sylvester resultant, Bareiss determinant)
// ---------------------------------------------------------------------------

/// Fraction-free (Bareiss) determinant of an integer matrix.
fn det_bareiss(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// Resultant of two integer polynomials (little-endian coefficients) via the
/// Sylvester matrix.
fn resultant(f: &[BigInt], g: &[BigInt]) -> BigInt {
    let n = f.len() - 1;
    let m = g.len() - 1;
    let size = n + m;
    if size == 0 {
        return BigInt::one();
    }
    let mut mat = vec![vec![BigInt::zero(); size]; size];
    // m rows of f coefficients (descending), then n rows of g.
    for (i, row) in mat.iter_mut().take(m).enumerate() {
        for k in 0..=n {
            row[i + k] = f[n - k].clone();
        }
    }
    for (i, row) in mat.iter_mut().skip(m).enumerate() {
        for k in 0..=m {
            row[i + k] = g[m - k].clone();
        }
    }
    det_bareiss(mat)
}

fn derivative(f: &[BigInt]) -> Vec<BigInt> {
    f.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigInt::from(i))
        .collect()
}

/// Discriminant of a monic integer polynomial.
pub fn poly_disc(f: &[BigInt]) -> BigInt {
    let n = f.len() - 1;
    let res = resultant(f, &derivative(f));
    if (n * (n - 1) / 2) % 2 == 1 {
        -res
    } else {
        res
    }
}

// ---------------------------------------------------------------------------
// Exact rational linear algebra (tiny dimensions)
// ---------------------------------------------------------------------------

fn qr(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn mat_identity_q(n: usize) -> Vec<Vec<BigRational>> {
    (0..n)
        .map(|i| (0..n).map(|j| qr((i == j) as i64)).collect())
        .collect()
}

/// Inverse of a square rational matrix, if nonsingular.
fn mat_inv_q(a: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut inv = mat_identity_q(n);
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col].clone();
        for j in 0..n {
            m[col][j] = &m[col][j] / &d;
            inv[col][j] = &inv[col][j] / &d;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for j in 0..n {
                    let mv = &m[col][j] * &factor;
                    m[r][j] = &m[r][j] - &mv;
                    let iv = &inv[col][j] * &factor;
                    inv[r][j] = &inv[r][j] - &iv;
                }
            }
        }
    }
    Some(inv)
}

fn mat_det_q(a: &[Vec<BigRational>]) -> BigRational {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let piv = match (col..n).find(|&r| !m[r][col].is_zero()) {
            Some(p) => p,
            None => return BigRational::zero(),
        };
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col].clone();
        let d = m[col][col].clone();
        for r in col + 1..n {
            if !m[r][col].is_zero() {
                let factor = &m[r][col] / &d;
                for j in col..n {
                    let v = &m[col][j] * &factor;
                    m[r][j] = &m[r][j] - &v;
                }
            }
        }
    }
    det
}

fn row_times_mat_q(v: &[BigRational], m: &[Vec<BigRational>]) -> Vec<BigRational> {
    let n = m[0].len();
    (0..n)
        .map(|j| {
            v.iter()
                .zip(m.iter())
                .fold(BigRational::zero(), |acc, (vi, row)| acc + vi * &row[j])
        })
        .collect()
}

fn mat_mul_q(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    a.iter().map(|row| row_times_mat_q(row, b)).collect()
}

/// Multiply two elements written in power-basis coordinates and reduce modulo
/// the monic defining polynomial.
fn power_basis_mul(a: &[BigRational], b: &[BigRational], f: &[BigRational]) -> Vec<BigRational> {
    let n = f.len() - 1;
    let mut prod = vec![BigRational::zero(); 2 * n - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            let v = ai * bj;
            prod[i + j] = &prod[i + j] + &v;
        }
    }
    for d in (n..2 * n - 1).rev() {
        if prod[d].is_zero() {
            continue;
        }
        let c = prod[d].clone();
        for k in 0..=n {
            let v = &c * &f[k];
            prod[d - n + k] = &prod[d - n + k] - &v;
        }
    }
    prod.truncate(n);
    prod
}

// ---------------------------------------------------------------------------
// Mod-p linear algebra
// ---------------------------------------------------------------------------

fn inv_mod(a: u64, p: u64) -> u64 {
    crate::arith::powmod(a, p - 2, p)
}

/// Basis of `{x : row · x = 0 for every row}` over F_p.
fn nullspace_mod_p(rows: &[Vec<u64>], ncols: usize, p: u64) -> Vec<Vec<u64>> {
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v % p).collect())
        .collect();
    let mut pivot_col_of_row = vec![];
    let mut row = 0;
    for col in 0..ncols {
        if let Some(r) = (row..m.len()).find(|&r| m[r][col] != 0) {
            m.swap(row, r);
            let inv = inv_mod(m[row][col], p);
            for j in 0..ncols {
                m[row][j] = crate::arith::mulmod(m[row][j], inv, p);
            }
            for r2 in 0..m.len() {
                if r2 != row && m[r2][col] != 0 {
                    let f = m[r2][col];
                    for j in 0..ncols {
                        let sub = crate::arith::mulmod(f, m[row][j], p);
                        m[r2][j] = (m[r2][j] + p - sub) % p;
                    }
                }
            }
            pivot_col_of_row.push(col);
            row += 1;
        }
    }
    let pivot_cols: HashSet<usize> = pivot_col_of_row.iter().copied().collect();
    let mut basis = vec![];
    for free in 0..ncols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; ncols];
        v[free] = 1;
        for (r, &pc) in pivot_col_of_row.iter().enumerate() {
            // pivot_col value = -coefficient of the free column in that row
            v[pc] = (p - m[r][free] % p) % p;
        }
        basis.push(v);
    }
    basis
}

// ---------------------------------------------------------------------------
// Hermite normal form over Z (row style)
// ---------------------------------------------------------------------------

/// Reduce generating rows to a Hermite-style upper-triangular basis.
fn hnf_rows(mut rows: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let n = rows[0].len();
    let mut top = 0usize;
    for col in 0..n {
        loop {
            let mut piv: Option<usize> = None;
            for i in top..rows.len() {
                if !rows[i][col].is_zero()
                    && piv.map_or(true, |p| rows[i][col].abs() < rows[p][col].abs())
                {
                    piv = Some(i);
                }
            }
            let Some(p) = piv else { break };
            rows.swap(top, p);
            let mut all_zero = true;
            for i in top + 1..rows.len() {
                if !rows[i][col].is_zero() {
                    let q = rows[i][col].div_floor(&rows[top][col]);
                    if !q.is_zero() {
                        for j in 0..n {
                            let v = &rows[i][j] - &q * &rows[top][j];
                            rows[i][j] = v;
                        }
                    }
                    if !rows[i][col].is_zero() {
                        all_zero = false;
                    }
                }
            }
            if all_zero {
                break;
            }
        }
        if top < rows.len() && !rows[top][col].is_zero() {
            if rows[top][col].is_negative() {
                for j in 0..n {
                    rows[top][j] = -rows[top][j].clone();
                }
            }
            for i in 0..top {
                let q = rows[i][col].div_floor(&rows[top][col]);
                if !q.is_zero() {
                    for j in 0..n {
                        let v = &rows[i][j] - &q * &rows[top][j];
                        rows[i][j] = v;
                    }
                }
            }
            top += 1;
        }
    }
    rows.truncate(top);
    rows
}

// ---------------------------------------------------------------------------
// Maximal-order discriminant (order enlargement at candidate primes)
// ---------------------------------------------------------------------------

/// Primes whose square divides d, certified by trial division.  Returns an
/// error when the unfactored part is too large to rule out a hidden square.
fn square_divisor_primes(d: &BigInt) -> Result<Vec<u64>> {
    let mut m = d.abs();
    let mut out = vec![];
    let mut p = 2u64;
    while p <= 1_000_000 {
        let pb = BigInt::from(p);
        if (&m % &pb).is_zero() {
            let mut e = 0u32;
            while (&m % &pb).is_zero() {
                m /= &pb;
                e += 1;
            }
            if e >= 2 {
                out.push(p);
            }
        }
        if m.is_one() {
            break;
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    if !m.is_one() {
        let r = m.sqrt();
        if &r * &r == m {
            let rp = r
                .to_u64()
                .ok_or_else(|| Error::BoundExceeded("discriminant cofactor too large".into()))?;
            if is_prime(rp) {
                out.push(rp);
            } else {
                return Err(Error::BoundExceeded(
                    "unfactored square cofactor in discriminant".into(),
                ));
            }
        } else if m >= BigInt::from(1_000_000_000_000u64) {
            return Err(Error::BoundExceeded(
                "discriminant cofactor too large to certify squarefree".into(),
            ));
        }
    }
    Ok(out)
}

struct OrderData {
    /// table[i][j] = integer coordinates of b_i * b_j in the order basis
    table: Vec<Vec<Vec<BigInt>>>,
}

fn order_structure(basis: &[Vec<BigRational>], f: &[BigRational]) -> Result<OrderData> {
    let n = basis.len();
    let inv = mat_inv_q(basis)
        .ok_or_else(|| Error::InvalidElement("degenerate order basis".into()))?;
    let mut table = vec![vec![vec![]; n]; n];
    for i in 0..n {
        for j in i..n {
            let prod = power_basis_mul(&basis[i], &basis[j], f);
            let coords = row_times_mat_q(&prod, &inv);
            let ints: Result<Vec<BigInt>> = coords
                .iter()
                .map(|c| {
                    if c.denom().is_one() {
                        Ok(c.numer().clone())
                    } else {
                        Err(Error::InvalidElement(
                            "order basis is not multiplicatively closed".into(),
                        ))
                    }
                })
                .collect();
            let ints = ints?;
            table[i][j] = ints.clone();
            table[j][i] = ints;
        }
    }
    Ok(OrderData { table })
}

fn algebra_mul_fp(a: &[u64], b: &[u64], table: &[Vec<Vec<BigInt>>], p: u64) -> Vec<u64> {
    let n = a.len();
    let mut out = vec![0u64; n];
    for i in 0..n {
        if a[i] == 0 {
            continue;
        }
        for j in 0..n {
            if b[j] == 0 {
                continue;
            }
            let c = crate::arith::mulmod(a[i], b[j], p);
            for (k, o) in out.iter_mut().enumerate() {
                let t = (&table[i][j][k] % BigInt::from(p) + BigInt::from(p)) % BigInt::from(p);
                let tv = t.to_u64().unwrap();
                *o = (*o + crate::arith::mulmod(c, tv, p)) % p;
            }
        }
    }
    out
}

fn algebra_pow_fp(x: &[u64], e: u64, one: &[u64], table: &[Vec<Vec<BigInt>>], p: u64) -> Vec<u64> {
    let mut acc = one.to_vec();
    let mut base = x.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = algebra_mul_fp(&acc, &base, table, p);
        }
        base = algebra_mul_fp(&base, &base, table, p);
        e >>= 1;
    }
    acc
}

/// One enlargement step at p.  Returns the index [O' : O] as a power of p and
/// the new basis (in power-basis coordinates); index 1 means p-maximal.
fn enlarge_at_p(
    basis: &mut Vec<Vec<BigRational>>,
    f: &[BigRational],
    p: u64,
) -> Result<BigInt> {
    let n = basis.len();
    let data = order_structure(basis, f)?;
    let inv = mat_inv_q(basis)
        .ok_or_else(|| Error::InvalidElement("degenerate order basis".into()))?;
    // coordinates of 1 in the current basis
    let mut one_power = vec![BigRational::zero(); n];
    one_power[0] = BigRational::one();
    let one_coords: Vec<u64> = row_times_mat_q(&one_power, &inv)
        .iter()
        .map(|c| {
            let v = (c.numer() % BigInt::from(p) + BigInt::from(p)) % BigInt::from(p);
            v.to_u64().unwrap()
        })
        .collect();

    // Frobenius matrix of x -> x^p on O/pO, then its m-th power with p^m >= n.
    let mut frob = vec![];
    for i in 0..n {
        let mut e_i = vec![0u64; n];
        e_i[i] = 1;
        frob.push(algebra_pow_fp(&e_i, p, &one_coords, &data.table, p));
    }
    let mut m_steps = 1u32;
    let mut pm = p;
    while pm < n as u64 {
        pm *= p;
        m_steps += 1;
    }
    let mut fm = frob.clone();
    for _ in 1..m_steps {
        // compose with frob: row i of new = (row i of fm) * frob-matrix
        fm = fm
            .iter()
            .map(|row| {
                let mut out = vec![0u64; n];
                for (k, &rk) in row.iter().enumerate() {
                    if rk == 0 {
                        continue;
                    }
                    for j in 0..n {
                        out[j] = (out[j] + crate::arith::mulmod(rk, frob[k][j], p)) % p;
                    }
                }
                out
            })
            .collect();
    }
    // radical = kernel of x -> x * Fm (equations are the columns of Fm)
    let eq_rows: Vec<Vec<u64>> = (0..n)
        .map(|j| (0..n).map(|i| fm[i][j]).collect())
        .collect();
    let radical = nullspace_mod_p(&eq_rows, n, p);

    // Ideal I = radical lifts + p * O, as an integer lattice in basis coords.
    let mut ideal_rows: Vec<Vec<BigInt>> = radical
        .iter()
        .map(|v| v.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    for i in 0..n {
        let mut r = vec![BigInt::zero(); n];
        r[i] = BigInt::from(p);
        ideal_rows.push(r);
    }
    let c = hnf_rows(ideal_rows);
    debug_assert_eq!(c.len(), n);
    let c_q: Vec<Vec<BigRational>> = c
        .iter()
        .map(|row| row.iter().map(|v| BigRational::from_integer(v.clone())).collect())
        .collect();
    let c_inv = mat_inv_q(&c_q)
        .ok_or_else(|| Error::InvalidElement("degenerate ideal basis".into()))?;

    // Constraints: y/p multiplies I into I  <=>  y * c_j lies in p*I for all j.
    let mut constraints = vec![];
    for cj in c.iter() {
        // products e_k * c_j in basis coords, then in ideal coordinates
        let mut w_rows = vec![];
        for k in 0..n {
            let v: Vec<BigRational> = (0..n)
                .map(|t| {
                    let mut s = BigInt::zero();
                    for (b, cjb) in cj.iter().enumerate() {
                        s += cjb * &data.table[k][b][t];
                    }
                    BigRational::from_integer(s)
                })
                .collect();
            let w = row_times_mat_q(&v, &c_inv);
            let w_int: Result<Vec<BigInt>> = w
                .iter()
                .map(|x| {
                    if x.denom().is_one() {
                        Ok(x.numer().clone())
                    } else {
                        Err(Error::InvalidElement("radical is not an ideal".into()))
                    }
                })
                .collect();
            w_rows.push(w_int?);
        }
        for l in 0..n {
            constraints.push(
                (0..n)
                    .map(|k| {
                        let v = (&w_rows[k][l] % BigInt::from(p) + BigInt::from(p))
                            % BigInt::from(p);
                        v.to_u64().unwrap()
                    })
                    .collect::<Vec<u64>>(),
            );
        }
    }
    let kernel = nullspace_mod_p(&constraints, n, p);

    let mut new_rows: Vec<Vec<BigInt>> = kernel
        .iter()
        .map(|v| v.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    for i in 0..n {
        let mut r = vec![BigInt::zero(); n];
        r[i] = BigInt::from(p);
        new_rows.push(r);
    }
    let h = hnf_rows(new_rows);
    debug_assert_eq!(h.len(), n);
    let det_h: BigInt = (0..n).map(|i| h[i][i].clone()).product();
    let pn = BigInt::from(p).pow(n as u32);
    let index = &pn / &det_h;
    if !index.is_one() {
        // new basis rows = (H / p) * old basis
        let h_over_p: Vec<Vec<BigRational>> = h
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| BigRational::new(v.clone(), BigInt::from(p)))
                    .collect()
            })
            .collect();
        *basis = mat_mul_q(&h_over_p, basis);
    }
    Ok(index)
}

/// Discriminant of the maximal order of Q[x]/(f) for a monic separable
/// integer polynomial, computed by repeated order enlargement.
pub fn maximal_order_disc(f_coeffs: &[i64]) -> Result<BigInt> {
    let n = f_coeffs.len().saturating_sub(1);
    if n < 2 || *f_coeffs.last().unwrap() != 1 {
        return Err(Error::InvalidElement(
            "expected a monic polynomial of degree at least 2".into(),
        ));
    }
    let f: Vec<BigInt> = f_coeffs.iter().map(|&c| BigInt::from(c)).collect();
    let disc_f = poly_disc(&f);
    if disc_f.is_zero() {
        return Err(Error::InvalidElement("polynomial is not separable".into()));
    }
    let f_q: Vec<BigRational> = f
        .iter()
        .map(|c| BigRational::from_integer(c.clone()))
        .collect();
    let mut basis = mat_identity_q(n);
    for p in square_divisor_primes(&disc_f)? {
        for _guard in 0..200 {
            let index = enlarge_at_p(&mut basis, &f_q, p)?;
            if index.is_one() {
                break;
            }
        }
    }
    let det = mat_det_q(&basis);
    let disc = BigRational::from_integer(disc_f) * &det * &det;
    if !disc.denom().is_one() {
        return Err(Error::InvalidElement(
            "non-integral discriminant from enlargement".into(),
        ));
    }
    Ok(disc.numer().clone())
}

// ---------------------------------------------------------------------------
// Quartic Galois group via the cubic resolvent
// ---------------------------------------------------------------------------

/// Galois group of an irreducible monic quartic, as a transitive subgroup
/// of S4.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuarticGroup {
    V4,
    C4,
    D4,
    A4,
    S4,
}

fn eval_i128(coeffs: &[i128], x: i128) -> i128 {
    coeffs.iter().rev().fold(0i128, |acc, &c| acc * x + c)
}

fn divisors_signed(n: i128) -> Vec<i128> {
    let n = n.unsigned_abs() as u64;
    let mut divs = vec![1u64];
    for (p, e) in factorize(n) {
        let mut next = vec![];
        for d in &divs {
            let mut pk = 1u64;
            for _ in 0..=e {
                next.push(d * pk);
                pk = pk.saturating_mul(p);
            }
        }
        divs = next;
    }
    divs.sort_unstable();
    divs.dedup();
    let mut out: Vec<i128> = divs.iter().map(|&d| d as i128).collect();
    out.extend(divs.iter().map(|&d| -(d as i128)));
    out
}

fn is_irreducible_quartic(a: i128, b: i128, c: i128, d: i128) -> bool {
    let f = [d, c, b, a, 1i128];
    // Rational (hence integer) roots.
    if d == 0 {
        return false;
    }
    for r in divisors_signed(d) {
        if eval_i128(&f, r) == 0 {
            return false;
        }
    }
    // Quadratic factorizations (x^2+ux+v)(x^2+u'x+v') with integer entries.
    for v in divisors_signed(d) {
        if d % v != 0 {
            continue;
        }
        let v2 = d / v;
        // u + u' = a, u u' = b - v - v2
        let s = a;
        let prod = b - v - v2;
        let disc = s * s - 4 * prod;
        if disc < 0 {
            continue;
        }
        let r = crate::arith::isqrt_i128(disc);
        if r * r != disc || (s - r) % 2 != 0 {
            continue;
        }
        let u = (s + r) / 2;
        let u2 = (s - r) / 2;
        if u * v2 + u2 * v == c || u2 * v2 + u * v == c {
            return false;
        }
    }
    true
}

fn bigint_is_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &(&r * &r) == n
}

/// Squarefree part (with sign) of a nonzero integer, by trial division.
fn squarefree_part_big(n: &BigInt) -> Result<BigInt> {
    let mut m = n.abs();
    let mut sf = BigInt::one();
    let mut p = 2u64;
    while p <= 1_000_000 {
        let pb = BigInt::from(p);
        if (&m % &pb).is_zero() {
            let mut e = 0u32;
            while (&m % &pb).is_zero() {
                m /= &pb;
                e += 1;
            }
            if e % 2 == 1 {
                sf *= pb;
            }
        }
        if m.is_one() {
            break;
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    if !m.is_one() {
        if bigint_is_square(&m) {
            // even exponent: contributes nothing
        } else if m < BigInt::from(1_000_000_000_000u64) {
            sf *= m;
        } else {
            return Err(Error::BoundExceeded(
                "cannot certify squarefree part".into(),
            ));
        }
    }
    Ok(if n.is_negative() { -sf } else { sf })
}

/// Galois group of an irreducible monic integer quartic via its cubic
/// resolvent.  Errors with `NotAField` when the quartic is reducible.
pub fn resolvent_galois(f_coeffs: &[i64; 5]) -> Result<QuarticGroup> {
    if f_coeffs[4] != 1 {
        return Err(Error::InvalidElement("expected a monic quartic".into()));
    }
    let (d, c, b, a) = (
        f_coeffs[0] as i128,
        f_coeffs[1] as i128,
        f_coeffs[2] as i128,
        f_coeffs[3] as i128,
    );
    if !is_irreducible_quartic(a, b, c, d) {
        return Err(Error::NotAField("quartic is reducible".into()));
    }
    // Resolvent cubic y^3 - b y^2 + (ac - 4d) y - (a^2 d - 4 b d + c^2).
    let r1 = a * c - 4 * d;
    let r0 = -(a * a * d - 4 * b * d + c * c);
    let r = [r0, r1, -b, 1i128];
    let mut roots: Vec<i128> = vec![];
    if r0 == 0 {
        roots.push(0);
        // remaining quadratic y^2 - b y + r1
        let disc = b * b - 4 * r1;
        if disc >= 0 {
            let s = crate::arith::isqrt_i128(disc);
            if s * s == disc {
                for cand in [(b + s) / 2, (b - s) / 2] {
                    if (b + s) % 2 == 0 && eval_i128(&r, cand) == 0 {
                        roots.push(cand);
                    }
                }
            }
        }
    } else {
        for cand in divisors_signed(r0) {
            if eval_i128(&r, cand) == 0 {
                roots.push(cand);
            }
        }
    }
    roots.sort_unstable();
    roots.dedup();

    let fz: Vec<BigInt> = f_coeffs.iter().map(|&x| BigInt::from(x)).collect();
    let disc = poly_disc(&fz);
    match roots.len() {
        0 => {
            if bigint_is_square(&disc) {
                Ok(QuarticGroup::A4)
            } else {
                Ok(QuarticGroup::S4)
            }
        }
        3 => Ok(QuarticGroup::V4),
        1 => {
            let y0 = roots[0];
            let a_res = BigInt::from(a * a - 4 * b + 4 * y0);
            let b_res = BigInt::from(y0 * y0 - 4 * d);
            let q4 = BigInt::from(a * y0 - 2 * c);
            let d0 = squarefree_part_big(&disc)?;
            let sq_or_zero = |x: &BigInt| x.is_zero() || bigint_is_square(x);
            let cyclic = &q4 * &q4 == &a_res * &b_res
                && sq_or_zero(&(&a_res * &d0))
                && sq_or_zero(&(&b_res * &d0));
            Ok(if cyclic {
                QuarticGroup::C4
            } else {
                QuarticGroup::D4
            })
        }
        _ => Err(Error::InvalidElement(
            "resolvent cubic with impossible root count".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Splitting type mod p by root extraction + distinct-degree tests
// ---------------------------------------------------------------------------

fn fp_deg(f: &[u64]) -> usize {
    f.iter().rposition(|&c| c != 0).unwrap_or(0)
}

fn fp_trim(f: &mut Vec<u64>) {
    while f.len() > 1 && *f.last().unwrap() == 0 {
        f.pop();
    }
}

fn fp_eval(f: &[u64], x: u64, p: u64) -> u64 {
    f.iter()
        .rev()
        .fold(0u64, |acc, &c| (crate::arith::mulmod(acc, x, p) + c) % p)
}

/// Divide f by (x - r); f must vanish at r.
fn fp_divide_root(f: &[u64], r: u64, p: u64) -> Vec<u64> {
    let n = fp_deg(f);
    let mut q = vec![0u64; n];
    let mut carry = 0u64;
    for i in (0..n).rev() {
        carry = (crate::arith::mulmod(carry, r, p) + f[i + 1]) % p;
        q[i] = carry;
    }
    debug_assert_eq!((crate::arith::mulmod(carry, r, p) + f[0]) % p, 0);
    q
}

fn fp_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + crate::arith::mulmod(ai, bj, p)) % p;
        }
    }
    fp_trim(&mut out);
    out
}

fn fp_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let dm = fp_deg(m);
    let lead_inv = inv_mod(m[dm], p);
    let mut r = a.to_vec();
    fp_trim(&mut r);
    while fp_deg(&r) >= dm && !(fp_deg(&r) == 0 && r[0] == 0) {
        let dr = fp_deg(&r);
        if dr < dm {
            break;
        }
        let c = crate::arith::mulmod(r[dr], lead_inv, p);
        if c != 0 {
            for k in 0..=dm {
                let sub = crate::arith::mulmod(c, m[k], p);
                r[dr - dm + k] = (r[dr - dm + k] + p - sub) % p;
            }
        }
        fp_trim(&mut r);
        if fp_deg(&r) == dr && r[dr] != 0 {
            break; // should not happen
        }
    }
    fp_trim(&mut r);
    r
}

fn fp_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    fp_trim(&mut x);
    fp_trim(&mut y);
    while !(fp_deg(&y) == 0 && y[0] == 0) {
        let r = fp_rem(&x, &y, p);
        x = y;
        y = r;
    }
    // normalize monic
    let d = fp_deg(&x);
    if x[d] != 0 && x[d] != 1 {
        let inv = inv_mod(x[d], p);
        for c in x.iter_mut() {
            *c = crate::arith::mulmod(*c, inv, p);
        }
    }
    x
}

fn fp_deriv(f: &[u64], p: u64) -> Vec<u64> {
    let mut out: Vec<u64> = f
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| crate::arith::mulmod(c, i as u64 % p, p))
        .collect();
    if out.is_empty() {
        out.push(0);
    }
    fp_trim(&mut out);
    out
}

/// x^e mod (f, p) by binary exponentiation.
fn fp_xpow_mod(e: u128, f: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut base = vec![0u64, 1u64]; // x
    base = fp_rem(&base, f, p);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = fp_rem(&fp_mul(&acc, &base, p), f, p);
        }
        base = fp_rem(&fp_mul(&base, &base, p), f, p);
        e >>= 1;
    }
    acc
}

/// Splitting type of a monic integer polynomial modulo an odd prime:
/// the sorted list of (degree, multiplicity) over the irreducible factors.
pub fn factor_mod_p(f_coeffs: &[i64], p: u64) -> Result<Vec<(u32, u32)>> {
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidFactor(format!(
            "need an odd prime modulus, got {p}"
        )));
    }
    if p > 1_000_000 {
        return Err(Error::BoundExceeded(
            "root scan modulus limited to 10^6".into(),
        ));
    }
    let deg = f_coeffs.len() - 1;
    if deg == 0 || deg > 4 || *f_coeffs.last().unwrap() != 1 {
        return Err(Error::InvalidElement(
            "expected a monic polynomial of degree 1..=4".into(),
        ));
    }
    let fp: Vec<u64> = f_coeffs
        .iter()
        .map(|&c| c.rem_euclid(p as i64) as u64)
        .collect();
    let mut out: Vec<(u32, u32)> = vec![];
    let mut g = fp;
    fp_trim(&mut g);
    for r in 0..p {
        if fp_deg(&g) == 0 {
            break;
        }
        let mut mult = 0u32;
        while fp_deg(&g) > 0 && fp_eval(&g, r, p) == 0 {
            g = fp_divide_root(&g, r, p);
            mult += 1;
        }
        if mult > 0 {
            out.push((1, mult));
        }
    }
    match fp_deg(&g) {
        0 => {}
        2 => out.push((2, 1)),
        3 => out.push((3, 1)),
        4 => {
            let der = fp_deriv(&g, p);
            let sq = fp_gcd(&g, &der, p);
            if fp_deg(&sq) == 2 {
                out.push((2, 2));
            } else {
                // squarefree: either irreducible or two distinct quadratics
                let xp2 = fp_xpow_mod((p as u128) * (p as u128), &g, p);
                let x_poly = vec![0u64, 1u64];
                let is_x = {
                    let mut a = xp2.clone();
                    fp_trim(&mut a);
                    a == x_poly
                };
                if is_x {
                    out.push((2, 1));
                    out.push((2, 1));
                } else {
                    out.push((4, 1));
                }
            }
        }
        _ => {
            return Err(Error::InvalidElement(
                "unexpected factor shape without roots".into(),
            ))
        }
    }
    out.sort_unstable();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tame dihedral classification by permutation pairs
// ---------------------------------------------------------------------------

/// A permutation of four points; `perm[i]` is the image of i.
pub type Perm4 = [u8; 4];

pub const P4_IDENTITY: Perm4 = [0, 1, 2, 3];

pub fn p4_compose(a: Perm4, b: Perm4) -> Perm4 {
    [
        a[b[0] as usize],
        a[b[1] as usize],
        a[b[2] as usize],
        a[b[3] as usize],
    ]
}

pub fn p4_inverse(a: Perm4) -> Perm4 {
    let mut out = [0u8; 4];
    for i in 0..4 {
        out[a[i] as usize] = i as u8;
    }
    out
}

pub fn p4_conj(g: Perm4, x: Perm4) -> Perm4 {
    p4_compose(p4_compose(g, x), p4_inverse(g))
}

pub fn p4_pow(a: Perm4, k: usize) -> Perm4 {
    let mut out = P4_IDENTITY;
    for _ in 0..k {
        out = p4_compose(out, a);
    }
    out
}

/// The dihedral group of order 8 stabilizing the pairing {{0,1},{2,3}}.
pub fn d4_elements() -> [Perm4; 8] {
    [
        [0, 1, 2, 3],
        [1, 0, 2, 3],
        [0, 1, 3, 2],
        [1, 0, 3, 2],
        [2, 3, 0, 1],
        [3, 2, 1, 0],
        [2, 3, 1, 0],
        [3, 2, 0, 1],
    ]
}

/// Subgroup generated by the given elements.
pub fn perm_closure(gens: &[Perm4]) -> Vec<Perm4> {
    let mut elems = vec![P4_IDENTITY];
    let mut frontier = vec![P4_IDENTITY];
    while let Some(g) = frontier.pop() {
        for &h in gens {
            let gh = p4_compose(g, h);
            if !elems.contains(&gh) {
                elems.push(gh);
                frontier.push(gh);
            }
        }
    }
    elems.sort_unstable();
    elems
}

fn orbits_under<F: Fn(Perm4, usize) -> usize>(
    elems: &[Perm4],
    npoints: usize,
    act: &F,
) -> Vec<Vec<usize>> {
    let mut seen = vec![false; npoints];
    let mut out = vec![];
    for start in 0..npoints {
        if seen[start] {
            continue;
        }
        let mut orbit = vec![start];
        seen[start] = true;
        let mut idx = 0;
        while idx < orbit.len() {
            let pt = orbit[idx];
            for &g in elems {
                let q = act(g, pt);
                if !seen[q] {
                    seen[q] = true;
                    orbit.push(q);
                }
            }
            idx += 1;
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    out
}

/// Ramification/residue data (e, f) per orbit of the decomposition group,
/// where e is the size of an inertia orbit inside it.
fn ef_symbol<F: Fn(Perm4, usize) -> usize>(
    dec: &[Perm4],
    iner: &[Perm4],
    npoints: usize,
    act: &F,
) -> Vec<(u32, u32)> {
    let mut out = vec![];
    for orbit in orbits_under(dec, npoints, act) {
        let sub = orbits_under(iner, npoints, act);
        let e = sub
            .iter()
            .find(|o| o.contains(&orbit[0]))
            .map(|o| o.len())
            .unwrap();
        out.push((e as u32, (orbit.len() / e) as u32));
    }
    out.sort_unstable();
    out
}

/// One conjugacy class of tame dihedral data: a Frobenius/inertia generator
/// pair up to simultaneous conjugacy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TameClass {
    pub frobenius: Perm4,
    pub inertia_gen: Perm4,
    /// sorted (e, f) pairs for the natural 4-point action
    pub quartic_symbol: Vec<(u32, u32)>,
    /// sorted (e, f) pairs for the induced 2-block action
    pub quadratic_symbol: Vec<(u32, u32)>,
    /// group label of the image when the 4-point action is transitive
    pub closure_label: Option<&'static str>,
    pub centralizer_order: u32,
    pub octic_disc_exponent: u32,
}

/// All pairs (x, y) in D4 x D4 with x y x^-1 = y^p, up to simultaneous
/// conjugacy; p only matters mod 4.
pub fn tame_dihedral_classes(p_mod4: u64) -> Vec<TameClass> {
    assert!(p_mod4 == 1 || p_mod4 == 3);
    let d4 = d4_elements();
    let mut seen: HashSet<(Perm4, Perm4)> = HashSet::new();
    let mut out = vec![];
    for &x in &d4 {
        for &y in &d4 {
            if p4_conj(x, y) != p4_pow(y, p_mod4 as usize) {
                continue;
            }
            let canon = d4
                .iter()
                .map(|&g| (p4_conj(g, x), p4_conj(g, y)))
                .min()
                .unwrap();
            if !seen.insert(canon) {
                continue;
            }
            let dec = perm_closure(&[x, y]);
            let iner = perm_closure(&[y]);
            let natural = |g: Perm4, i: usize| g[i] as usize;
            let blocks = |g: Perm4, b: usize| (g[2 * b] / 2) as usize;
            let quartic_symbol = ef_symbol(&dec, &iner, 4, &natural);
            let quadratic_symbol = ef_symbol(&dec, &iner, 2, &blocks);
            let transitive = orbits_under(&dec, 4, &natural).len() == 1;
            let closure_label = if transitive {
                Some(if dec.len() == 8 {
                    "D4"
                } else if dec.iter().any(|g| p4_pow(*g, 2) != P4_IDENTITY) {
                    "C4"
                } else {
                    "V4"
                })
            } else {
                None
            };
            let centralizer_order = d4
                .iter()
                .filter(|&&g| p4_conj(g, x) == x && p4_conj(g, y) == y)
                .count() as u32;
            // Regular action of <y> on the eight elements by left translation.
            let regular = |g: Perm4, i: usize| {
                let target = p4_compose(g, d4[i]);
                d4.iter().position(|&h| h == target).unwrap()
            };
            let octic_disc_exponent = (8 - orbits_under(&iner, 8, &regular).len()) as u32;
            out.push(TameClass {
                frobenius: x,
                inertia_gen: y,
                quartic_symbol,
                quadratic_symbol,
                closure_label,
                centralizer_order,
                octic_disc_exponent,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc_of(f: &[i64]) -> i64 {
        maximal_order_disc(f).unwrap().to_i64().unwrap()
    }

    #[test]
    fn quadratic_field_discs() {
        assert_eq!(disc_of(&[1, 0, 1]), -4); // x^2 + 1
        assert_eq!(disc_of(&[-5, 0, 1]), 5); // x^2 - 5: index 2
        assert_eq!(disc_of(&[-3, 0, 1]), 12); // x^2 - 3
        assert_eq!(disc_of(&[-2, 0, 1]), 8);
    }

    #[test]
    fn quartic_field_discs() {
        assert_eq!(disc_of(&[1, 0, -1, 0, 1]), 144); // x^4 - x^2 + 1
        assert_eq!(disc_of(&[1, 0, 0, 0, 1]), 256); // x^4 + 1
        assert_eq!(disc_of(&[36, 0, -8, 0, 1]), 400); // x^4 - 8x^2 + 36: index 96
        assert_eq!(disc_of(&[-2, 0, 0, 0, 1]), -2048); // x^4 - 2
        assert_eq!(disc_of(&[-1, 0, -1, 0, 1]), -400); // x^4 - x^2 - 1
    }

    #[test]
    fn polynomial_discriminants() {
        let f: Vec<BigInt> = [1i64, 0, 1].iter().map(|&c| BigInt::from(c)).collect();
        assert_eq!(poly_disc(&f), BigInt::from(-4));
        let f: Vec<BigInt> = [36i64, 0, -8, 0, 1].iter().map(|&c| BigInt::from(c)).collect();
        assert_eq!(poly_disc(&f), BigInt::from(3_686_400i64)); // 400 * 96^2
    }

    #[test]
    fn resolvent_groups() {
        assert_eq!(resolvent_galois(&[1, 0, 0, 0, 1]).unwrap(), QuarticGroup::V4);
        assert_eq!(resolvent_galois(&[1, 0, -1, 0, 1]).unwrap(), QuarticGroup::V4);
        assert_eq!(resolvent_galois(&[36, 0, -8, 0, 1]).unwrap(), QuarticGroup::V4);
        assert_eq!(resolvent_galois(&[1, 1, 1, 1, 1]).unwrap(), QuarticGroup::C4);
        assert_eq!(resolvent_galois(&[2, 0, -4, 0, 1]).unwrap(), QuarticGroup::C4);
        assert_eq!(resolvent_galois(&[-2, 0, 0, 0, 1]).unwrap(), QuarticGroup::D4);
        assert_eq!(resolvent_galois(&[-1, 0, -1, 0, 1]).unwrap(), QuarticGroup::D4);
        assert_eq!(resolvent_galois(&[12, 8, 0, 0, 1]).unwrap(), QuarticGroup::A4);
        assert_eq!(resolvent_galois(&[1, 1, 0, 0, 1]).unwrap(), QuarticGroup::S4);
        assert!(matches!(
            resolvent_galois(&[-4, 0, 0, 0, 1]),
            Err(Error::NotAField(_))
        ));
    }

    #[test]
    fn splitting_types_mod_p() {
        assert_eq!(factor_mod_p(&[1, 0, 1], 5).unwrap(), vec![(1, 1), (1, 1)]);
        assert_eq!(factor_mod_p(&[1, 0, 1], 3).unwrap(), vec![(2, 1)]);
        assert_eq!(
            factor_mod_p(&[1, 0, -1, 0, 1], 5).unwrap(),
            vec![(2, 1), (2, 1)]
        );
        assert_eq!(factor_mod_p(&[-5, 0, 1], 5).unwrap(), vec![(1, 2)]);
        assert_eq!(factor_mod_p(&[-1, 0, -1, 0, 1], 5).unwrap(), vec![(2, 2)]);
        assert_eq!(factor_mod_p(&[1, 0, -1, 0, 1], 13).unwrap(), vec![(1, 1); 4]);
        // x^4 + 1 is irreducible only mod primes p = 3, 5 mod 8... never; it
        // always splits.  Use x^4 - 2 mod 5 instead: 2 is not a 4th power or
        // square mod 5, and x^4 - 2 stays irreducible.
        assert_eq!(factor_mod_p(&[-2, 0, 0, 0, 1], 5).unwrap(), vec![(4, 1)]);
    }

    #[test]
    fn tame_class_counts() {
        let c1 = tame_dihedral_classes(1);
        let c3 = tame_dihedral_classes(3);
        assert_eq!(c1.len(), 22);
        assert_eq!(c3.len(), 20);
        let by_exp = |cs: &[TameClass], e: u32| cs.iter().filter(|c| c.octic_disc_exponent == e).count();
        assert_eq!(by_exp(&c1, 0), 5);
        assert_eq!(by_exp(&c1, 4), 13);
        assert_eq!(by_exp(&c1, 6), 4);
        assert_eq!(by_exp(&c3, 0), 5);
        assert_eq!(by_exp(&c3, 4), 13);
        assert_eq!(by_exp(&c3, 6), 2);
    }

    #[test]
    fn tame_class_shapes() {
        // Trivial class: everything unramified and split.
        let c1 = tame_dihedral_classes(1);
        let trivial = c1
            .iter()
            .find(|c| c.frobenius == P4_IDENTITY && c.inertia_gen == P4_IDENTITY)
            .unwrap();
        assert_eq!(trivial.quartic_symbol, vec![(1, 1); 4]);
        assert_eq!(trivial.quadratic_symbol, vec![(1, 1); 2]);
        assert_eq!(trivial.centralizer_order, 8);
        assert_eq!(trivial.octic_disc_exponent, 0);

        // Totally ramified cyclic classes exist exactly for p = 1 mod 4.
        let tot_ram_cyclic = |cs: &[TameClass]| {
            cs.iter()
                .filter(|c| {
                    c.quartic_symbol == vec![(4, 1)] && c.closure_label == Some("C4")
                })
                .count()
        };
        assert_eq!(tot_ram_cyclic(&c1), 4);
        let c3 = tame_dihedral_classes(3);
        assert_eq!(tot_ram_cyclic(&c3), 0);
        // ... while the fully dihedral totally ramified classes need p = 3.
        let tot_ram_dihedral = |cs: &[TameClass]| {
            cs.iter()
                .filter(|c| {
                    c.quartic_symbol == vec![(4, 1)] && c.closure_label == Some("D4")
                })
                .count()
        };
        assert_eq!(tot_ram_dihedral(&c1), 0);
        assert_eq!(tot_ram_dihedral(&c3), 2);
        for c in c3.iter().filter(|c| c.quartic_symbol == vec![(4, 1)]) {
            assert_eq!(c.centralizer_order, 2);
            assert_eq!(c.quadratic_symbol, vec![(2, 1)]);
            assert_eq!(c.octic_disc_exponent, 6);
        }
    }
}
