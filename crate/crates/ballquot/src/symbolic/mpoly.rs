//! Sparse polynomials in the four variables `(z1, z2, u1, u2)` with exact
//! coefficients in `Q(zeta_N)`.
//!
//! Here `u` stands for `conj(w)`: kernel numerators are holomorphic in
//! `(z, conj(w))`, so every identity they satisfy is polynomial in these four
//! variables. Terms live in a `BTreeMap` keyed by exponent vectors, which
//! keeps iteration order (and hence every downstream report) deterministic.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::Vec2;
use crate::symbolic::cyclo::CycloNum;

/// Exponents of `(z1, z2, u1, u2)`.
pub type Expt = [u16; 4];

/// Which variable pair an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Z,
    U,
}

impl Side {
    fn base(self) -> usize {
        match self {
            Side::Z => 0,
            Side::U => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MPoly {
    n: u32,
    terms: BTreeMap<Expt, CycloNum>,
}

impl MPoly {
    pub fn zero(n: u32) -> MPoly {
        MPoly { n, terms: BTreeMap::new() }
    }

    pub fn one(n: u32) -> MPoly {
        MPoly::constant(CycloNum::one(n))
    }

    pub fn constant(c: CycloNum) -> MPoly {
        let n = c.conductor();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert([0, 0, 0, 0], c);
        }
        MPoly { n, terms }
    }

    /// The single variable `z1, z2, u1, u2` for index `0..4`.
    pub fn var(n: u32, idx: usize) -> MPoly {
        assert!(idx < 4);
        let mut e = [0u16; 4];
        e[idx] = 1;
        MPoly::monomial(e, CycloNum::one(n))
    }

    pub fn monomial(e: Expt, c: CycloNum) -> MPoly {
        let n = c.conductor();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        MPoly { n, terms }
    }

    pub fn conductor(&self) -> u32 {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Expt, &CycloNum)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Expt) -> Option<&CycloNum> {
        self.terms.get(e)
    }

    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, idx: usize) -> u16 {
        self.terms.keys().map(|e| e[idx]).max().unwrap_or(0)
    }

    fn insert_add(terms: &mut BTreeMap<Expt, CycloNum>, e: Expt, c: CycloNum) {
        if c.is_zero() {
            return;
        }
        match terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, rhs: &MPoly) -> MPoly {
        assert_eq!(self.n, rhs.n, "mixed conductors");
        let mut terms = self.terms.clone();
        for (e, c) in &rhs.terms {
            Self::insert_add(&mut terms, *e, c.clone());
        }
        MPoly { n: self.n, terms }
    }

    pub fn sub(&self, rhs: &MPoly) -> MPoly {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> MPoly {
        let terms = self.terms.iter().map(|(e, c)| (*e, c.neg())).collect();
        MPoly { n: self.n, terms }
    }

    pub fn scale(&self, c: &CycloNum) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.n);
        }
        let terms = self.terms.iter().map(|(e, v)| (*e, v.mul(c))).collect();
        MPoly { n: self.n, terms }
    }

    pub fn mul(&self, rhs: &MPoly) -> MPoly {
        assert_eq!(self.n, rhs.n, "mixed conductors");
        let work = self.terms.len().saturating_mul(rhs.terms.len());
        // parallel product for large operands; exact addition commutes, so
        // the merged result is independent of chunking
        if work >= 1 << 15 && self.terms.len() >= 8 {
            let lhs: Vec<(&Expt, &CycloNum)> = self.terms.iter().collect();
            let chunk = lhs.len().div_ceil(2 * rayon::current_num_threads().max(1));
            let maps: Vec<BTreeMap<Expt, CycloNum>> = lhs
                .par_chunks(chunk.max(1))
                .map(|part| {
                    let mut local = BTreeMap::new();
                    for (ea, ca) in part {
                        for (eb, cb) in &rhs.terms {
                            let e = [
                                ea[0] + eb[0],
                                ea[1] + eb[1],
                                ea[2] + eb[2],
                                ea[3] + eb[3],
                            ];
                            Self::insert_add(&mut local, e, ca.mul(cb));
                        }
                    }
                    local
                })
                .collect();
            let mut terms = BTreeMap::new();
            for m in maps {
                for (e, c) in m {
                    Self::insert_add(&mut terms, e, c);
                }
            }
            return MPoly { n: self.n, terms };
        }
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
                Self::insert_add(&mut terms, e, ca.mul(cb));
            }
        }
        MPoly { n: self.n, terms }
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut acc = MPoly::one(self.n);
        let mut base = self.clone();
        let mut e = e;
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

    /// Numeric evaluation at `z` and `u` (remember `u = conj(w)`).
    pub fn eval(&self, z: &Vec2, u: &Vec2) -> Complex64 {
        let vals = [z[0], z[1], u[0], u[1]];
        let mut pows: [Vec<Complex64>; 4] = [vec![], vec![], vec![], vec![]];
        for v in 0..4 {
            let d = self.degree_in(v) as usize;
            let mut t = Vec::with_capacity(d + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=d {
                t.push(acc);
                acc *= vals[v];
            }
            pows[v] = t;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            acc += c.embed()
                * pows[0][e[0] as usize]
                * pows[1][e[1] as usize]
                * pows[2][e[2] as usize]
                * pows[3][e[3] as usize];
        }
        acc
    }

    /// The Hermitian transpose `P*`: swap the `z` and `u` exponent pairs and
    /// conjugate coefficients. A kernel numerator equals its own transpose
    /// exactly when the kernel is Hermitian.
    pub fn hermitian_transpose(&self) -> MPoly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| ([e[2], e[3], e[0], e[1]], c.conj()))
            .collect();
        MPoly { n: self.n, terms }
    }

    /// Substitutes the chosen variable pair by a linear image:
    /// `x1 -> m[0][0] x1 + m[0][1] x2`, `x2 -> m[1][0] x1 + m[1][1] x2`.
    /// Evaluation satisfies `subst(P, M)(v) = P(M v)`.
    pub fn linear_substitute(&self, side: Side, m: &[[CycloNum; 2]; 2]) -> MPoly {
        let b = side.base();
        let diag = m[0][1].is_zero() && m[1][0].is_zero();
        let anti = m[0][0].is_zero() && m[1][1].is_zero();
        if diag || anti {
            // monomial fast path: exponents permute, coefficients pick up powers
            let d1 = self.degree_in(b) as u32;
            let d2 = self.degree_in(b + 1) as u32;
            let (a, d) = if diag { (&m[0][0], &m[1][1]) } else { (&m[0][1], &m[1][0]) };
            let pa = power_table(a, d1);
            let pd = power_table(d, d2);
            let mut terms = BTreeMap::new();
            for (e, c) in &self.terms {
                let (e1, e2) = (e[b], e[b + 1]);
                let coeff = c.mul(&pa[e1 as usize]).mul(&pd[e2 as usize]);
                let mut out = *e;
                if anti {
                    out[b] = e2;
                    out[b + 1] = e1;
                }
                Self::insert_add(&mut terms, out, coeff);
            }
            return MPoly { n: self.n, terms };
        }
        // general path: binomial expansion of each factor
        let d1 = self.degree_in(b) as u32;
        let d2 = self.degree_in(b + 1) as u32;
        let p00 = power_table(&m[0][0], d1);
        let p01 = power_table(&m[0][1], d1);
        let p10 = power_table(&m[1][0], d2);
        let p11 = power_table(&m[1][1], d2);
        let binom = binomial_table(d1.max(d2) as usize);
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let (a_deg, b_deg) = (e[b] as usize, e[b + 1] as usize);
            // (m00 x1 + m01 x2)^a
            for i in 0..=a_deg {
                let ca = m_choose(&binom, a_deg, i);
                let fa = p00[i].mul(&p01[a_deg - i]).scale(&ca);
                if fa.is_zero() {
                    continue;
                }
                // (m10 x1 + m11 x2)^b
                for j in 0..=b_deg {
                    let cb = m_choose(&binom, b_deg, j);
                    let fb = p10[j].mul(&p11[b_deg - j]).scale(&cb);
                    if fb.is_zero() {
                        continue;
                    }
                    let mut out = *e;
                    out[b] = (i + j) as u16;
                    out[b + 1] = (a_deg - i + b_deg - j) as u16;
                    Self::insert_add(&mut terms, out, c.mul(&fa).mul(&fb));
                }
            }
        }
        MPoly { n: self.n, terms }
    }

    /// Exact division by the `k`-th power of a linear form
    /// `a1 x1 + a2 x2` on the chosen side. Returns `(quotient, remainder)`
    /// with `P = quotient * form^k + remainder`; the remainder is the part of
    /// `P` whose form-degree is below `k` after the change of variables
    /// `t = a1 x1 + a2 x2`, so it vanishes exactly when the division is exact.
    pub fn divide_by_form_power(
        &self,
        side: Side,
        form: &[CycloNum; 2],
        k: u32,
    ) -> Result<(MPoly, MPoly)> {
        if form[0].is_zero() && form[1].is_zero() {
            return Err(Error::ZeroForm);
        }
        if k == 0 {
            return Ok((self.clone(), MPoly::zero(self.n)));
        }
        let b = side.base();
        // pure single-variable forms divide by exponent shift
        if form[1].is_zero() || form[0].is_zero() {
            let var = if form[1].is_zero() { b } else { b + 1 };
            let a = if form[1].is_zero() { &form[0] } else { &form[1] };
            let inv_k = a.inverse()?.pow(k);
            let mut q = BTreeMap::new();
            let mut r = BTreeMap::new();
            for (e, c) in &self.terms {
                if e[var] >= k as u16 {
                    let mut out = *e;
                    out[var] -= k as u16;
                    Self::insert_add(&mut q, out, c.mul(&inv_k));
                } else {
                    Self::insert_add(&mut r, *e, c.clone());
                }
            }
            return Ok((MPoly { n: self.n, terms: q }, MPoly { n: self.n, terms: r }));
        }
        // general form: rotate coordinates so the form becomes the first
        // variable, split by its exponent, rotate back
        let a1_inv = form[0].inverse()?;
        let fwd = [
            [a1_inv.clone(), form[1].neg().mul(&a1_inv)],
            [CycloNum::zero(self.n), CycloNum::one(self.n)],
        ];
        let back = [
            [form[0].clone(), form[1].clone()],
            [CycloNum::zero(self.n), CycloNum::one(self.n)],
        ];
        let rotated = self.linear_substitute(side, &fwd);
        let mut q = BTreeMap::new();
        let mut r = BTreeMap::new();
        for (e, c) in &rotated.terms {
            if e[b] >= k as u16 {
                let mut out = *e;
                out[b] -= k as u16;
                Self::insert_add(&mut q, out, c.clone());
            } else {
                Self::insert_add(&mut r, *e, c.clone());
            }
        }
        let q = MPoly { n: self.n, terms: q }.linear_substitute(side, &back);
        let r = MPoly { n: self.n, terms: r }.linear_substitute(side, &back);
        Ok((q, r))
    }
}

fn power_table(a: &CycloNum, up_to: u32) -> Vec<CycloNum> {
    let mut t = Vec::with_capacity(up_to as usize + 1);
    let mut acc = CycloNum::one(a.conductor());
    for _ in 0..=up_to {
        t.push(acc.clone());
        acc = acc.mul(a);
    }
    t
}

/// Pascal's triangle as exact rationals, rows `0..=n`.
fn binomial_table(n: usize) -> Vec<Vec<BigRational>> {
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(n + 1);
    for r in 0..=n {
        let mut row = vec![BigRational::from_integer(BigInt::one()); r + 1];
        for c in 1..r {
            row[c] = &rows[r - 1][c - 1] + &rows[r - 1][c];
        }
        rows.push(row);
    }
    rows
}

fn m_choose(t: &[Vec<BigRational>], n: usize, k: usize) -> BigRational {
    t[n][k].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_poly(n: u32) -> MPoly {
        // 3 z1^2 u1 - (1/2) zeta z2 u2^2 + z1 z2 u1 u2 + 7
        let zeta = CycloNum::root_of_unity(n, 1);
        MPoly::monomial([2, 0, 1, 0], CycloNum::from_i64(n, 3))
            .add(&MPoly::monomial(
                [0, 1, 0, 2],
                zeta.scale(&BigRational::new((-1).into(), 2.into())),
            ))
            .add(&MPoly::monomial([1, 1, 1, 1], CycloNum::one(n)))
            .add(&MPoly::constant(CycloNum::from_i64(n, 7)))
    }

    #[test]
    fn arithmetic_commutes_with_evaluation() {
        let n = 4;
        let p = sample_poly(n);
        let q = MPoly::var(n, 0).add(&MPoly::var(n, 3).scale(&CycloNum::from_i64(n, 2)));
        let z = [c64(0.3, 0.1), c64(-0.2, 0.4)];
        let u = [c64(0.1, -0.5), c64(0.7, 0.2)];
        let lhs = p.mul(&q).eval(&z, &u);
        let rhs = p.eval(&z, &u) * q.eval(&z, &u);
        assert!((lhs - rhs).norm() < 1e-12);
        let lhs = p.add(&q).eval(&z, &u);
        let rhs = p.eval(&z, &u) + q.eval(&z, &u);
        assert!((lhs - rhs).norm() < 1e-12);
        assert_eq!(p.sub(&p), MPoly::zero(n));
    }

    #[test]
    fn substitution_evaluates_to_composition() {
        let n = 4;
        let p = sample_poly(n);
        let i = CycloNum::root_of_unity(n, 1);
        let m = [
            [CycloNum::from_i64(n, 1), i.clone()],
            [i.neg(), CycloNum::from_i64(n, 2)],
        ];
        let sub = p.linear_substitute(Side::Z, &m);
        let z = [c64(0.2, 0.05), c64(-0.1, 0.3)];
        let u = [c64(0.4, -0.2), c64(0.15, 0.25)];
        // M z in numbers
        let mi = c64(0.0, 1.0);
        let mz = [z[0] + mi * z[1], -mi * z[0] + 2.0 * z[1]];
        let lhs = sub.eval(&z, &u);
        let rhs = p.eval(&mz, &u);
        assert!((lhs - rhs).norm() < 1e-12, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn monomial_fast_path_agrees_with_general_path() {
        let n = 12;
        let p = sample_poly(n);
        // antidiagonal with roots of unity: the fast path applies
        let m = [
            [CycloNum::zero(n), CycloNum::root_of_unity(n, 5)],
            [CycloNum::root_of_unity(n, 7), CycloNum::zero(n)],
        ];
        let sub = p.linear_substitute(Side::U, &m);
        let z = [c64(0.3, 0.0), c64(0.0, 0.2)];
        let u = [c64(0.25, 0.1), c64(-0.3, 0.15)];
        let w5 = CycloNum::root_of_unity(n, 5).embed();
        let w7 = CycloNum::root_of_unity(n, 7).embed();
        let mu = [w5 * u[1], w7 * u[0]];
        assert!((sub.eval(&z, &u) - p.eval(&z, &mu)).norm() < 1e-12);
    }

    #[test]
    fn hermitian_transpose_is_an_involution_and_antihomomorphism() {
        let n = 8;
        let p = sample_poly(n);
        let q = MPoly::var(n, 1).add(&MPoly::constant(CycloNum::root_of_unity(n, 3)));
        assert_eq!(p.hermitian_transpose().hermitian_transpose(), p);
        assert_eq!(
            p.mul(&q).hermitian_transpose(),
            p.hermitian_transpose().mul(&q.hermitian_transpose())
        );
    }

    #[test]
    fn division_by_a_pure_variable_power() {
        let n = 4;
        let p = sample_poly(n);
        let form = [CycloNum::from_i64(n, 3), CycloNum::zero(n)]; // 3 z1
        let prod = p.mul(&MPoly::monomial([2, 0, 0, 0], CycloNum::from_i64(n, 9)));
        let (q, r) = prod.divide_by_form_power(Side::Z, &form, 2).unwrap();
        assert!(r.is_zero());
        assert_eq!(q, p);
    }

    #[test]
    fn division_roundtrip_with_remainder() {
        let n = 4;
        let p = sample_poly(n);
        let form = [CycloNum::from_i64(n, 1), CycloNum::from_i64(n, -1)]; // z1 - z2
        let form_poly = MPoly::var(n, 0).sub(&MPoly::var(n, 1));
        let k = 2u32;
        let with_noise = p.mul(&form_poly.pow(k)).add(&MPoly::var(n, 1)); // rem = z2
        let (q, r) = with_noise.divide_by_form_power(Side::Z, &form, k).unwrap();
        // round trip is exact
        let rebuilt = q.mul(&form_poly.pow(k)).add(&r);
        assert_eq!(rebuilt, with_noise);
        assert!(!r.is_zero());
        // and the clean multiple divides exactly with quotient p
        let (q2, r2) = p.mul(&form_poly.pow(k)).divide_by_form_power(Side::Z, &form, k).unwrap();
        assert!(r2.is_zero());
        assert_eq!(q2, p);
    }

    #[test]
    fn division_rejects_the_zero_form() {
        let n = 4;
        let p = sample_poly(n);
        let zero_form = [CycloNum::zero(n), CycloNum::zero(n)];
        assert!(matches!(
            p.divide_by_form_power(Side::Z, &zero_form, 1),
            Err(Error::ZeroForm)
        ));
    }

    #[test]
    fn u_side_division_leaves_z_alone() {
        let n = 4;
        let p = sample_poly(n);
        let form = [CycloNum::from_i64(n, 2), CycloNum::from_i64(n, 1)];
        let form_poly = MPoly::var(n, 2).scale(&CycloNum::from_i64(n, 2)).add(&MPoly::var(n, 3));
        let (q, r) = p.mul(&form_poly).divide_by_form_power(Side::U, &form, 1).unwrap();
        assert!(r.is_zero());
        assert_eq!(q, p);
    }

    #[test]
    fn degrees_and_term_counts() {
        let n = 4;
        let p = sample_poly(n);
        assert_eq!(p.total_degree(), 4);
        assert_eq!(p.num_terms(), 4);
        assert_eq!(p.degree_in(0), 2);
        assert_eq!(p.degree_in(3), 2);
    }
}
