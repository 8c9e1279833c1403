//! Exact arithmetic in cyclotomic fields `Q(zeta_N)`.
//!
//! A value is stored in the power basis `1, zeta, ..., zeta^{phi(N)-1}` with
//! rational coordinates, reduced modulo the `N`-th cyclotomic polynomial.
//! Per-conductor data (the cyclotomic polynomial, reduction rows for the high
//! powers produced by multiplication, conjugation rows and the numeric
//! embedding powers) lives in a [`CycloTable`] behind an `Arc`: values are
//! cheap to clone and arithmetic never re-derives the tables. Tables are
//! cached in a global registry keyed by conductor.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Euler's totient by trial division; conductors here are two-digit numbers.
pub fn euler_phi(n: u32) -> u32 {
    assert!(n >= 1);
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// Exact long division of integer polynomials (ascending coefficients);
/// panics unless the division is exact and the divisor is monic.
fn int_poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dd = den.len() - 1;
    let nd = num.len() - 1;
    assert!(den[dd].is_one(), "divisor must be monic");
    assert!(nd >= dd);
    let mut rem = num.to_vec();
    let mut quot = vec![BigInt::zero(); nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd].clone();
        if c.is_zero() {
            continue;
        }
        for j in 0..=dd {
            rem[k + j] = &rem[k + j] - &c * &den[j];
        }
        quot[k] = c;
    }
    assert!(rem.iter().all(Zero::is_zero), "inexact polynomial division");
    quot
}

/// Coefficients of the `n`-th cyclotomic polynomial, ascending degree.
/// Computed as `(x^n - 1) / prod_{d | n, d < n} Phi_d(x)`.
fn cyclotomic_poly(n: u32) -> Vec<BigInt> {
    if n == 1 {
        return vec![-BigInt::one(), BigInt::one()]; // x - 1
    }
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = -BigInt::one();
    num[n as usize] = BigInt::one();
    let mut poly = num;
    for d in 1..n {
        if n % d == 0 {
            poly = int_poly_div_exact(&poly, &cyclotomic_poly(d));
        }
    }
    poly
}

/// Shared per-conductor data for `Q(zeta_n)` arithmetic.
pub struct CycloTable {
    n: u32,
    phi: usize,
    /// `rows[k]` = coordinates of `zeta^k` in the power basis, for
    /// `k <= max(2*phi - 2, n - 1)` (products and conjugates stay in range).
    rows: Vec<Vec<BigRational>>,
    /// Cyclotomic polynomial coefficients as rationals, ascending, monic.
    modulus: Vec<BigRational>,
    /// `exp(2*pi*i*j/n)` for `j < phi`.
    embed_pows: Vec<Complex64>,
}

impl CycloTable {
    fn new(n: u32) -> CycloTable {
        let phi = euler_phi(n) as usize;
        let modulus: Vec<BigRational> = cyclotomic_poly(n)
            .into_iter()
            .map(BigRational::from_integer)
            .collect();
        let max_pow = (2 * phi).saturating_sub(2).max(n as usize - 1);
        let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(max_pow + 1);
        for k in 0..=max_pow {
            if k < phi {
                let mut row = vec![BigRational::zero(); phi];
                row[k] = BigRational::one();
                rows.push(row);
            } else {
                // zeta^k = zeta * zeta^{k-1}; the overflow coefficient folds
                // back through x^phi = -(m_0 + m_1 x + ... + m_{phi-1} x^{phi-1}).
                let prev = &rows[k - 1];
                let mut row = vec![BigRational::zero(); phi];
                for j in 1..phi {
                    row[j] = prev[j - 1].clone();
                }
                let t = prev[phi - 1].clone();
                if !t.is_zero() {
                    for j in 0..phi {
                        if !modulus[j].is_zero() {
                            row[j] -= &t * &modulus[j];
                        }
                    }
                }
                rows.push(row);
            }
        }
        let embed_pows = (0..phi)
            .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect();
        CycloTable { n, phi, rows, modulus, embed_pows }
    }

    pub fn conductor(&self) -> u32 {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.phi
    }
}

fn registry() -> &'static Mutex<HashMap<u32, Arc<CycloTable>>> {
    static REGISTRY: OnceLock<Mutex<HashMap<u32, Arc<CycloTable>>>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The shared table for conductor `n`, building and caching it on first use.
pub fn conductor_table(n: u32) -> Arc<CycloTable> {
    assert!(n >= 1, "conductor must be positive");
    let mut map = registry().lock().expect("cyclotomic table registry poisoned");
    map.entry(n).or_insert_with(|| Arc::new(CycloTable::new(n))).clone()
}

/// An element of `Q(zeta_N)` in the power basis.
#[derive(Clone)]
pub struct CycloNum {
    table: Arc<CycloTable>,
    c: Vec<BigRational>,
}

impl PartialEq for CycloNum {
    fn eq(&self, other: &Self) -> bool {
        self.table.n == other.table.n && self.c == other.c
    }
}
impl Eq for CycloNum {}

impl fmt::Debug for CycloNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclo(n={};", self.table.n)?;
        for (j, a) in self.c.iter().enumerate() {
            if !a.is_zero() {
                write!(f, " {}*z^{}", a, j)?;
            }
        }
        write!(f, ")")
    }
}

impl CycloNum {
    pub fn zero(n: u32) -> CycloNum {
        let table = conductor_table(n);
        let phi = table.phi;
        CycloNum { table, c: vec![BigRational::zero(); phi] }
    }

    pub fn one(n: u32) -> CycloNum {
        CycloNum::from_rational(n, BigRational::one())
    }

    pub fn from_rational(n: u32, r: BigRational) -> CycloNum {
        let mut out = CycloNum::zero(n);
        out.c[0] = r;
        out
    }

    pub fn from_i64(n: u32, v: i64) -> CycloNum {
        CycloNum::from_rational(n, BigRational::from_integer(BigInt::from(v)))
    }

    /// `zeta_n^k` (any integer `k`, reduced mod `n`).
    pub fn root_of_unity(n: u32, k: i64) -> CycloNum {
        let table = conductor_table(n);
        let k = k.rem_euclid(n as i64) as usize;
        CycloNum { c: table.rows[k].clone(), table }
    }

    pub fn conductor(&self) -> u32 {
        self.table.n
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    pub fn is_rational(&self) -> Option<&BigRational> {
        if self.c[1..].iter().all(Zero::is_zero) {
            Some(&self.c[0])
        } else {
            None
        }
    }

    fn assert_same_field(&self, rhs: &CycloNum) {
        assert_eq!(
            self.table.n, rhs.table.n,
            "mixed conductors {} and {}; embed first",
            self.table.n, rhs.table.n
        );
    }

    pub fn add(&self, rhs: &CycloNum) -> CycloNum {
        self.assert_same_field(rhs);
        let c = self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect();
        CycloNum { table: self.table.clone(), c }
    }

    pub fn sub(&self, rhs: &CycloNum) -> CycloNum {
        self.assert_same_field(rhs);
        let c = self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect();
        CycloNum { table: self.table.clone(), c }
    }

    pub fn neg(&self) -> CycloNum {
        let c = self.c.iter().map(|a| -a).collect();
        CycloNum { table: self.table.clone(), c }
    }

    pub fn mul(&self, rhs: &CycloNum) -> CycloNum {
        self.assert_same_field(rhs);
        let phi = self.table.phi;
        let mut prod = vec![BigRational::zero(); 2 * phi - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.c.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        let mut out = vec![BigRational::zero(); phi];
        for (k, coeff) in prod.into_iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            for (j, r) in self.table.rows[k].iter().enumerate() {
                if !r.is_zero() {
                    out[j] += &coeff * r;
                }
            }
        }
        CycloNum { table: self.table.clone(), c: out }
    }

    pub fn scale(&self, r: &BigRational) -> CycloNum {
        let c = self.c.iter().map(|a| a * r).collect();
        CycloNum { table: self.table.clone(), c }
    }

    pub fn pow(&self, mut e: u32) -> CycloNum {
        let mut base = self.clone();
        let mut acc = CycloNum::one(self.table.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Complex conjugation, i.e. the Galois action `zeta -> zeta^{-1}`.
    pub fn conj(&self) -> CycloNum {
        let n = self.table.n;
        let phi = self.table.phi;
        let mut out = vec![BigRational::zero(); phi];
        for (j, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let idx = ((n as usize) - j) % n as usize;
            for (t, r) in self.table.rows[idx].iter().enumerate() {
                if !r.is_zero() {
                    out[t] += a * r;
                }
            }
        }
        CycloNum { table: self.table.clone(), c: out }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm in
    /// `Q[x]` modulo the (irreducible) cyclotomic polynomial.
    pub fn inverse(&self) -> Result<CycloNum> {
        if self.is_zero() {
            return Err(Error::BadDivisor("inverse of zero in Q(zeta_N)".into()));
        }
        let modulus = trim(&self.table.modulus);
        let a = trim(&self.c);
        let mut r0 = modulus;
        let mut s0: Vec<BigRational> = Vec::new();
        let mut r1 = a;
        let mut s1 = vec![BigRational::one()];
        while poly_deg(&r1) > 0 {
            let (q, r2) = poly_divmod(&r0, &r1);
            assert!(!r2.is_empty(), "cyclotomic polynomial must be irreducible over Q");
            let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r2);
            s0 = std::mem::replace(&mut s1, s2);
        }
        let c = r1[0].clone();
        debug_assert!(!c.is_zero());
        let inv_c = BigRational::one() / c;
        let mut inv = poly_scale(&s1, &inv_c);
        // s1 has degree < phi by the Euclidean invariants, but reduce defensively.
        if poly_deg(&inv) >= self.table.phi as isize {
            let (_, r) = poly_divmod(&inv, &trim(&self.table.modulus));
            inv = r;
        }
        inv.resize(self.table.phi, BigRational::zero());
        Ok(CycloNum { table: self.table.clone(), c: inv })
    }

    pub fn div(&self, rhs: &CycloNum) -> Result<CycloNum> {
        Ok(self.mul(&rhs.inverse()?))
    }

    /// Numeric value under `zeta_N -> exp(2*pi*i/N)`.
    pub fn embed(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, a) in self.c.iter().enumerate() {
            if !a.is_zero() {
                let x = a.to_f64().expect("rational out of f64 range");
                acc += self.table.embed_pows[j] * x;
            }
        }
        acc
    }

    /// Re-express in `Q(zeta_m)` for a multiple `m` of the conductor
    /// (`zeta_n = zeta_m^{m/n}`). Rational values convert to any conductor;
    /// otherwise errors if `n` does not divide `m`.
    pub fn embed_into(&self, m: u32) -> Result<CycloNum> {
        let n = self.table.n;
        if m == n {
            return Ok(self.clone());
        }
        if m % n != 0 {
            if let Some(r) = self.is_rational() {
                return Ok(CycloNum::from_rational(m, r.clone()));
            }
            return Err(Error::NotCyclotomic {
                conductor: m,
                what: format!("conductor {} does not divide {}", n, m),
            });
        }
        let target = conductor_table(m);
        let step = (m / n) as usize;
        let mut out = vec![BigRational::zero(); target.phi];
        for (j, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (t, r) in target.rows[j * step].iter().enumerate() {
                if !r.is_zero() {
                    out[t] += a * r;
                }
            }
        }
        Ok(CycloNum { table: target, c: out })
    }

    /// Flat ordering key (conductor-local); used to keep exact group element
    /// lists in a stable set order.
    pub fn order_key(&self) -> &[BigRational] {
        &self.c
    }
}

// -- small dense polynomial helpers over Q (ascending coefficients, trimmed) --

fn trim(p: &[BigRational]) -> Vec<BigRational> {
    let mut v = p.to_vec();
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
    v
}

/// Degree with `deg 0 = -1` for the zero polynomial.
fn poly_deg(p: &[BigRational]) -> isize {
    p.len() as isize - 1
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] -= x;
    }
    trim(&out)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    trim(&out)
}

fn poly_scale(a: &[BigRational], s: &BigRational) -> Vec<BigRational> {
    trim(&a.iter().map(|x| x * s).collect::<Vec<_>>())
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    assert!(!b.is_empty(), "division by zero polynomial");
    let db = b.len() - 1;
    let mut rem = a.to_vec();
    if rem.len() <= db {
        return (Vec::new(), trim(&rem));
    }
    let mut quot = vec![BigRational::zero(); rem.len() - db];
    let lead_inv = BigRational::one() / b[db].clone();
    for k in (0..quot.len()).rev() {
        let c = &rem[k + db] * &lead_inv;
        if c.is_zero() {
            continue;
        }
        for j in 0..=db {
            if !b[j].is_zero() {
                rem[k + j] -= &c * &b[j];
            }
        }
        quot[k] = c;
    }
    (trim(&quot), trim(&rem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn totient_small_values() {
        for (n, expected) in [(1, 1), (2, 1), (3, 2), (4, 2), (6, 2), (8, 4), (12, 4), (36, 12)] {
            assert_eq!(euler_phi(n), expected, "phi({})", n);
        }
    }

    #[test]
    fn cyclotomic_polynomials_match_known_tables() {
        let as_i64 = |n: u32| -> Vec<i64> {
            cyclotomic_poly(n).iter().map(|c| c.to_i64().unwrap()).collect()
        };
        assert_eq!(as_i64(1), vec![-1, 1]);
        assert_eq!(as_i64(2), vec![1, 1]);
        assert_eq!(as_i64(4), vec![1, 0, 1]);
        assert_eq!(as_i64(6), vec![1, -1, 1]);
        assert_eq!(as_i64(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn primitive_root_powers_wrap() {
        let a = CycloNum::root_of_unity(12, 13);
        let b = CycloNum::root_of_unity(12, 1);
        assert_eq!(a, b);
        let c = CycloNum::root_of_unity(12, -1);
        assert_eq!(c, CycloNum::root_of_unity(12, 11));
    }

    #[test]
    fn i_squared_is_minus_one() {
        let i = CycloNum::root_of_unity(4, 1);
        assert_eq!(i.mul(&i), CycloNum::from_i64(4, -1));
    }

    #[test]
    fn sixth_root_satisfies_its_minimal_polynomial() {
        // zeta_6^2 - zeta_6 + 1 = 0
        let z = CycloNum::root_of_unity(6, 1);
        let val = z.mul(&z).sub(&z).add(&CycloNum::one(6));
        assert!(val.is_zero());
    }

    #[test]
    fn conjugate_inverts_roots_of_unity() {
        for n in [3u32, 4, 5, 6, 8, 12] {
            for k in 0..n as i64 {
                let z = CycloNum::root_of_unity(n, k);
                assert_eq!(z.conj().mul(&z), CycloNum::one(n), "n={} k={}", n, k);
                assert_eq!(z.conj().conj(), z);
            }
        }
    }

    #[test]
    fn inverse_times_self_is_one() {
        let z = CycloNum::root_of_unity(5, 1);
        let a = CycloNum::one(5).add(&z); // 1 + zeta_5
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), CycloNum::one(5));
        assert!(CycloNum::zero(7).inverse().is_err());
    }

    #[test]
    fn embedding_is_a_field_homomorphism_numerically() {
        let z = CycloNum::root_of_unity(12, 5);
        let w = CycloNum::root_of_unity(12, 7).scale(&BigRational::new(3.into(), 7.into()));
        let lhs = z.mul(&w).embed();
        let rhs = z.embed() * w.embed();
        assert!(close(lhs, rhs, 1e-13), "{} vs {}", lhs, rhs);
        let lhs = z.add(&w).embed();
        let rhs = z.embed() + w.embed();
        assert!(close(lhs, rhs, 1e-13));
    }

    #[test]
    fn conductor_embedding_preserves_values() {
        let z3 = CycloNum::root_of_unity(3, 1);
        let lifted = z3.embed_into(6).unwrap();
        assert_eq!(lifted, CycloNum::root_of_unity(6, 2));
        assert!(close(lifted.embed(), z3.embed(), 1e-14));
        assert!(z3.embed_into(8).is_err());
    }

    proptest! {
        #[test]
        fn ring_axioms_hold_on_random_elements(
            a0 in -5i64..5, a1 in -5i64..5, b0 in -5i64..5, b1 in -5i64..5, c0 in -5i64..5,
        ) {
            let n = 8u32;
            let mk = |x: i64, y: i64| {
                CycloNum::from_i64(n, x).add(&CycloNum::root_of_unity(n, 3).scale(
                    &BigRational::from_integer(y.into())))
            };
            let a = mk(a0, a1);
            let b = mk(b0, b1);
            let c = mk(c0, 1).add(&CycloNum::root_of_unity(n, 2));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            // conjugation is a ring automorphism
            prop_assert_eq!(a.mul(&b).conj(), a.conj().mul(&b.conj()));
            if !a.is_zero() {
                let inv = a.inverse().unwrap();
                prop_assert_eq!(a.mul(&inv), CycloNum::one(n));
            }
        }
    }
}
