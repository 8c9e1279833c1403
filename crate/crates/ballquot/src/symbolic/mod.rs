//! Exact kernel numerators over cyclotomic fields.
//!
//! Clearing denominators in the averaged kernel
//! `K_G = (1/|G|) sum_g det(g) (1 - B_g)^{-3}` (where
//! `B_g(z, u) = u^T g z` is the pairing form of `g`) gives
//!
//! `K_G = Q / (|G| * prod_g (1 - B_g)^3)`,
//! `Q = sum_m det(m) prod_{l != m} (1 - B_l)^3`,
//!
//! a polynomial identity in `(z1, z2, u1, u2)` with `u = conj(w)`. This
//! module expands `Q` exactly over `Q(zeta_N)` (`N` = group exponent), checks
//! its transformation symmetries, and peels off the forced hyperplane-form
//! factors: `Q = Jz * Ju * M` with `Jz = prod_Y <z, rho_Y>^{m_Y - 1}` and
//! `Ju` its conjugate partner on the `u` side. The analogous numerator over
//! the complement of a cyclic reflection subgroup factors the same way one
//! hyperplane at a time ([`compute_b_factorization`]).

pub mod cyclo;
pub mod mpoly;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::{ExactMat, ReflectionGroup};
use crate::kernels::{BallPoint, KernelConfig};
use crate::symbolic::cyclo::CycloNum;
use crate::symbolic::mpoly::{MPoly, Side};

/// Exact matrices of all elements, re-embedded at the group exponent.
/// Errors if any element lacks exact entries or the conductor does not divide
/// the exponent.
fn exact_elements(group: &ReflectionGroup) -> Result<Vec<ExactMat>> {
    let n = group.exponent;
    group
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| match &e.exact {
            Some(ex) => ex.embed_into(n),
            None => Err(Error::NotCyclotomic {
                conductor: n,
                what: format!("element {} of {} has numeric-only entries", i, group.name),
            }),
        })
        .collect()
}

/// The pairing form `B_g(z, u) = u^T g z = sum_{i,j} g_{ij} z_j u_i`, so that
/// `1 - <g.z, w> = 1 - B_g(z, conj(w))`.
pub fn pairing_form(g: &ExactMat) -> MPoly {
    let n = g.conductor();
    let mut acc = MPoly::zero(n);
    for i in 0..2 {
        for j in 0..2 {
            if !g.m[i][j].is_zero() {
                let mut e = [0u16; 4];
                e[j] = 1; // z_j
                e[2 + i] += 1; // u_i
                acc = acc.add(&MPoly::monomial(e, g.m[i][j].clone()));
            }
        }
    }
    acc
}

fn cube_factors(mats: &[ExactMat], n: u32) -> Vec<MPoly> {
    mats.par_iter()
        .map(|m| MPoly::one(n).sub(&pairing_form(m)).pow(3))
        .collect()
}

/// Signed sum of products over an index set, computed with prefix/suffix
/// products: `sum_i w_i * prod_{j != i} F_j` in `O(|F|)` big multiplications.
fn weighted_complement_products(factors: &[MPoly], weights: &[CycloNum], n: u32) -> MPoly {
    let k = factors.len();
    assert_eq!(k, weights.len());
    if k == 0 {
        return MPoly::zero(n);
    }
    let mut prefix = Vec::with_capacity(k);
    prefix.push(MPoly::one(n));
    for f in &factors[..k - 1] {
        let last = prefix.last().unwrap();
        prefix.push(last.mul(f));
    }
    let mut suffix = vec![MPoly::one(n); k + 1];
    for i in (1..k).rev() {
        suffix[i] = factors[i].mul(&suffix[i + 1]);
    }
    let parts: Vec<MPoly> = (0..k)
        .into_par_iter()
        .map(|i| prefix[i].mul(&suffix[i + 1]).scale(&weights[i]))
        .collect();
    parts.into_iter().fold(MPoly::zero(n), |acc, p| acc.add(&p))
}

/// Expands the full numerator `Q = sum_m det(m) prod_{l != m} (1 - B_l)^3`.
/// Total degree is at most `3 (2|G| - 2)` (the signed top-degree parts can
/// cancel), split evenly between `z` and `u`.
pub fn expand_q(group: &ReflectionGroup) -> Result<MPoly> {
    let n = group.exponent;
    let mats = exact_elements(group)?;
    let dets: Vec<CycloNum> = mats.iter().map(ExactMat::det).collect();
    let factors = cube_factors(&mats, n);
    let q = weighted_complement_products(&factors, &dets, n);
    debug_assert!(q.total_degree() <= 3 * (2 * group.order() - 2));
    Ok(q)
}

/// The cleared denominator `L = prod_{i in indices} (1 - B_{g_i})^3`.
pub fn l_polynomial(group: &ReflectionGroup, indices: &[usize]) -> Result<MPoly> {
    let n = group.exponent;
    let mats = exact_elements(group)?;
    let mut acc = MPoly::one(n);
    for &i in indices {
        acc = acc.mul(&MPoly::one(n).sub(&pairing_form(&mats[i])).pow(3));
    }
    Ok(acc)
}

/// Verifies the two-sided transformation law of a kernel numerator: for every
/// generator `s` of `G` acting on `z` and every generator `t` of `H` acting
/// on `u`, the substitution `(z, u) -> (s.z, conj(t).u)` must scale `P` by
/// `det(t) * conj(det(s))`. Generators suffice because the substitutions
/// compose multiplicatively. Comparisons are exact.
pub fn skew_check(p: &MPoly, g: &ReflectionGroup, h: &ReflectionGroup) -> Result<bool> {
    let n = p.conductor();
    let embed_gens = |grp: &ReflectionGroup| -> Result<Vec<ExactMat>> {
        grp.generators
            .iter()
            .map(|&i| match &grp.elements[i].exact {
                Some(ex) => ex.embed_into(n),
                None => Err(Error::NotCyclotomic {
                    conductor: n,
                    what: format!("generator {} of {} has numeric-only entries", i, grp.name),
                }),
            })
            .collect()
    };
    for s in embed_gens(g)? {
        let moved = p.linear_substitute(Side::Z, &s.m);
        let expected = p.scale(&s.det().conj());
        if moved != expected {
            return Ok(false);
        }
    }
    for t in embed_gens(h)? {
        let conj_t = [
            [t.m[0][0].conj(), t.m[0][1].conj()],
            [t.m[1][0].conj(), t.m[1][1].conj()],
        ];
        let moved = p.linear_substitute(Side::U, &conj_t);
        let expected = p.scale(&t.det());
        if moved != expected {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact division by `form^k` on one side; returns the quotient and whether
/// the remainder vanished.
pub fn exact_divide(
    p: &MPoly,
    side: Side,
    form: &[CycloNum; 2],
    k: u32,
) -> Result<(MPoly, bool)> {
    let (q, r) = p.divide_by_form_power(side, form, k)?;
    Ok((q, r.is_zero()))
}

/// `P == P*` under the Hermitian transpose (swap `z <-> u`, conjugate
/// coefficients); polynomial form of `K(z, w) = conj(K(w, z))`.
pub fn hermitian_symmetry_check(p: &MPoly) -> bool {
    *p == p.hermitian_transpose()
}

/// Hyperplane form data for exact peeling: the `z`-side form `<z, rho_Y>`
/// has coefficients `(conj rho_1, conj rho_2)`, the `u`-side partner
/// `conj(<w, rho_Y>)` has `(rho_1, rho_2)`; both are peeled to the power
/// `m_Y - 1`.
pub struct HyperplaneForms {
    pub z_form: [CycloNum; 2],
    pub u_form: [CycloNum; 2],
    pub power: u32,
}

pub fn hyperplane_forms(group: &ReflectionGroup) -> Result<Vec<HyperplaneForms>> {
    let n = group.exponent;
    group
        .hyperplanes
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let rho = h.exact_root.as_ref().ok_or_else(|| Error::NotCyclotomic {
                conductor: n,
                what: format!("hyperplane {} of {} has no exact root", k, group.name),
            })?;
            let r0 = rho[0].embed_into(n)?;
            let r1 = rho[1].embed_into(n)?;
            Ok(HyperplaneForms {
                z_form: [r0.conj(), r1.conj()],
                u_form: [r0, r1],
                power: (h.multiplicity - 1) as u32,
            })
        })
        .collect()
}

/// The hyperplane-form products `Jz = prod_Y <z, rho_Y>^{m_Y - 1}` and its
/// `u`-side partner, as exact polynomials (no normalizing constant).
pub fn jacobian_polys(group: &ReflectionGroup) -> Result<(MPoly, MPoly)> {
    let n = group.exponent;
    let mut jz = MPoly::one(n);
    let mut ju = MPoly::one(n);
    for f in hyperplane_forms(group)? {
        let zf = MPoly::var(n, 0)
            .scale(&f.z_form[0])
            .add(&MPoly::var(n, 1).scale(&f.z_form[1]));
        let uf = MPoly::var(n, 2)
            .scale(&f.u_form[0])
            .add(&MPoly::var(n, 3).scale(&f.u_form[1]));
        jz = jz.mul(&zf.pow(f.power));
        ju = ju.mul(&uf.pow(f.power));
    }
    Ok((jz, ju))
}

/// Peels every forced hyperplane factor off `Q`: returns `M` with
/// `Q = Jz * Ju * M` exactly. Errors with `DivisionFailed` if any peel
/// leaves a remainder (which would falsify the factorization claim).
pub fn compute_m(group: &ReflectionGroup) -> Result<MPoly> {
    let q = expand_q(group)?;
    compute_m_from(group, &q)
}

/// Same as [`compute_m`] but reusing an already-expanded numerator.
pub fn compute_m_from(group: &ReflectionGroup, q: &MPoly) -> Result<MPoly> {
    let mut m = q.clone();
    for (k, f) in hyperplane_forms(group)?.iter().enumerate() {
        if f.power == 0 {
            continue;
        }
        let (quot, ok) = exact_divide(&m, Side::Z, &f.z_form, f.power)?;
        if !ok {
            return Err(Error::DivisionFailed(format!(
                "z-side hyperplane {} of {} (power {})",
                k, group.name, f.power
            )));
        }
        m = quot;
        let (quot, ok) = exact_divide(&m, Side::U, &f.u_form, f.power)?;
        if !ok {
            return Err(Error::DivisionFailed(format!(
                "u-side hyperplane {} of {} (power {})",
                k, group.name, f.power
            )));
        }
        m = quot;
    }
    Ok(m)
}

/// Exact factorization of the complement numerator attached to one
/// reflection `r`: with `H = <r>` and `C = G \ H`,
///
/// `B(z, w) = sum_{q in C} det(q) K(q.z, w) = N_B / L`,
/// `L = prod_{q in C} (1 - B_q)^3`,
///
/// and `N_B` carries the forced factors `<z, rho_r>^{|H|-1}` and its `u`-side
/// partner: `N_B = <z, rho_r>^{|H|-1} * P_H` and `P_H = u_form^{|H|-1} * Q_H`.
pub struct BFactorization {
    pub numerator: MPoly,
    pub p_h: MPoly,
    pub q_h: MPoly,
    /// Element indices of `C = G \ H`, defining `L`.
    pub l_indices: Vec<usize>,
    /// The peeled power `|H| - 1`.
    pub power: u32,
}

pub fn compute_b_factorization(
    group: &ReflectionGroup,
    refl_index: usize,
) -> Result<BFactorization> {
    let n = group.exponent;
    if !group.reflections.contains(&refl_index) {
        return Err(Error::NotReflection { index: refl_index });
    }
    let mats = exact_elements(group)?;
    // H = powers of r
    let mut h_indices = vec![group.identity_index()];
    let mut cur = refl_index;
    while cur != group.identity_index() {
        h_indices.push(cur);
        cur = group.product_index(cur, refl_index);
    }
    let power = (h_indices.len() - 1) as u32;
    let l_indices: Vec<usize> =
        (0..group.order()).filter(|i| !h_indices.contains(i)).collect();
    if l_indices.is_empty() {
        // G = H: the complement sum is empty and B vanishes identically
        return Ok(BFactorization {
            numerator: MPoly::zero(n),
            p_h: MPoly::zero(n),
            q_h: MPoly::zero(n),
            l_indices,
            power,
        });
    }
    let factors: Vec<MPoly> = {
        let sel: Vec<&ExactMat> = l_indices.iter().map(|&i| &mats[i]).collect();
        sel.par_iter()
            .map(|m| MPoly::one(n).sub(&pairing_form(m)).pow(3))
            .collect()
    };
    let weights: Vec<CycloNum> = l_indices.iter().map(|&i| mats[i].det()).collect();
    let numerator = weighted_complement_products(&factors, &weights, n);

    // exact root of r, from its own hyperplane
    let h_slot = group
        .hyperplanes
        .iter()
        .position(|h| h.members.contains(&refl_index))
        .expect("reflection belongs to a hyperplane");
    let rho = group.hyperplanes[h_slot].exact_root.as_ref().ok_or_else(|| {
        Error::NotCyclotomic {
            conductor: n,
            what: format!("hyperplane of reflection {} has no exact root", refl_index),
        }
    })?;
    let r0 = rho[0].embed_into(n)?;
    let r1 = rho[1].embed_into(n)?;
    let z_form = [r0.conj(), r1.conj()];
    let u_form = [r0, r1];

    let (p_h, ok) = exact_divide(&numerator, Side::Z, &z_form, power)?;
    if !ok {
        return Err(Error::DivisionFailed(format!(
            "z-side peel of the complement numerator for reflection {}",
            refl_index
        )));
    }
    let (q_h, ok) = exact_divide(&p_h, Side::U, &u_form, power)?;
    if !ok {
        return Err(Error::DivisionFailed(format!(
            "u-side peel of the complement numerator for reflection {}",
            refl_index
        )));
    }
    Ok(BFactorization { numerator, p_h, q_h, l_indices, power })
}

/// Numeric evaluation of a numerator polynomial at ball points
/// (`u = conj(w)` is handled here).
pub fn eval_mpoly(p: &MPoly, z: &BallPoint, w: &BallPoint) -> Complex64 {
    let u = [w.z1().conj(), w.z2().conj()];
    p.eval(z.coords(), &u)
}

/// Evaluates the averaged kernel through its cleared-denominator form
/// `Q / (|G| prod_g (1 - B_g)^3)`; a cross-check against the direct sum.
pub fn averaged_kernel_via_numerator(
    group: &ReflectionGroup,
    q: &MPoly,
    z: &BallPoint,
    w: &BallPoint,
    cfg: &KernelConfig,
) -> Result<Complex64> {
    let mut denom = Complex64::new(group.order() as f64, 0.0);
    for (i, e) in group.elements.iter().enumerate() {
        let gz = z.transform(&e.mat);
        let s = Complex64::new(1.0, 0.0) - crate::kernels::pairing(gz.coords(), w.coords());
        if s.norm() < 1e-300 {
            return Err(Error::SingularPoint { index: i, value: s.norm() });
        }
        denom *= s * s * s;
    }
    let scale = if cfg.normalized { crate::kernels::NORMALIZATION } else { 1.0 };
    Ok(scale * eval_mpoly(q, z, w) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups;
    use crate::kernels;
    use num_complex::Complex64;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn numerator_of_the_order_two_axis_group() {
        // G = <diag(-1, 1)>: Q = 6 z1 u1 (1 - z2 u2)^2 + 2 (z1 u1)^3
        let g = groups::cyclic(2, [c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let q = expand_q(&g).unwrap();
        let n = g.exponent;
        let want = |e: [u16; 4], v: i64| {
            assert_eq!(
                q.coeff(&e).cloned().unwrap_or_else(|| CycloNum::zero(n)),
                CycloNum::from_i64(n, v),
                "coefficient at {:?}",
                e
            );
        };
        want([1, 0, 1, 0], 6);
        want([1, 1, 1, 1], -12);
        want([1, 2, 1, 2], 6);
        want([3, 0, 3, 0], 2);
        assert_eq!(q.num_terms(), 4);
        assert_eq!(q.total_degree(), 6);
    }

    #[test]
    fn m_of_the_order_two_axis_group() {
        // peeling z1 u1 once gives M = 6 (1 - z2 u2)^2 + 2 z1^2 u1^2
        let g = groups::cyclic(2, [c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let m = compute_m(&g).unwrap();
        let n = g.exponent;
        assert_eq!(m.coeff(&[0, 0, 0, 0]), Some(&CycloNum::from_i64(n, 6)));
        assert_eq!(m.coeff(&[0, 1, 0, 1]), Some(&CycloNum::from_i64(n, -12)));
        assert_eq!(m.coeff(&[0, 2, 0, 2]), Some(&CycloNum::from_i64(n, 6)));
        assert_eq!(m.coeff(&[2, 0, 2, 0]), Some(&CycloNum::from_i64(n, 2)));
        assert_eq!(m.total_degree(), 4);
        assert!(hermitian_symmetry_check(&m));
    }

    #[test]
    fn full_numerator_factors_exactly_for_g212() {
        let g = groups::family_g(2, 1).unwrap();
        let q = expand_q(&g).unwrap();
        assert!(q.total_degree() <= 3 * (2 * g.order() - 2));
        assert!(!q.is_zero());
        let m = compute_m_from(&g, &q).unwrap();
        let (jz, ju) = jacobian_polys(&g).unwrap();
        assert_eq!(jz.mul(&ju).mul(&m), q, "Q = Jz * Ju * M must be exact");
        assert!(hermitian_symmetry_check(&q));
        assert!(hermitian_symmetry_check(&m));
        assert!(skew_check(&q, &g, &g).unwrap());
    }

    #[test]
    fn skew_check_detects_a_broken_numerator() {
        let g = groups::family_g(2, 2).unwrap();
        let q = expand_q(&g).unwrap();
        assert!(skew_check(&q, &g, &g).unwrap());
        // damage one coefficient
        let n = g.exponent;
        let bad = q.add(&MPoly::monomial([1, 0, 1, 0], CycloNum::from_i64(n, 1)));
        assert!(!skew_check(&bad, &g, &g).unwrap());
    }

    #[test]
    fn numerator_evaluation_matches_the_direct_average() {
        let g = groups::family_g(3, 3).unwrap();
        let q = expand_q(&g).unwrap();
        let cfg = kernels::KernelConfig::default();
        let pts = [
            ([0.31, -0.12, 0.24, 0.05], [-0.20, 0.13, 0.10, -0.21]),
            ([0.05, 0.40, -0.30, 0.10], [0.22, 0.11, -0.14, 0.33]),
        ];
        for (za, wa) in pts {
            let z = BallPoint::from_array(za).unwrap();
            let w = BallPoint::from_array(wa).unwrap();
            let direct = kernels::averaged_kernel(&g, &z, &w, &cfg).unwrap();
            let via = averaged_kernel_via_numerator(&g, &q, &z, &w, &cfg).unwrap();
            assert!(
                (direct - via).norm() <= 1e-10 * (1.0 + direct.norm()),
                "{} vs {}",
                direct,
                via
            );
        }
    }

    #[test]
    fn complement_numerator_factors_for_g222() {
        let g = groups::family_g(2, 2).unwrap();
        let r = g.reflections[0];
        let bf = compute_b_factorization(&g, r).unwrap();
        assert_eq!(bf.l_indices.len(), g.order() - 2);
        assert_eq!(bf.power, 1);
        assert!(hermitian_symmetry_check(&bf.numerator));
        // numeric cross-check: N_B / L equals the complement sum
        let l = l_polynomial(&g, &bf.l_indices).unwrap();
        let cfg = kernels::KernelConfig::default();
        let z = BallPoint::from_array([0.25, 0.10, -0.30, 0.20]).unwrap();
        let w = BallPoint::from_array([0.10, -0.34, 0.20, 0.15]).unwrap();
        let mut direct = Complex64::new(0.0, 0.0);
        for &i in &bf.l_indices {
            let e = &g.elements[i];
            let gz = z.transform(&e.mat);
            direct += e.det * kernels::ball_kernel(&gz, &w, &cfg).unwrap();
        }
        let via = eval_mpoly(&bf.numerator, &z, &w) / eval_mpoly(&l, &z, &w);
        assert!((direct - via).norm() <= 1e-10 * (1.0 + direct.norm()));
        // the peeled factors rebuild the numerator exactly
        let n = g.exponent;
        let rho = g.hyperplanes
            .iter()
            .find(|h| h.members.contains(&r))
            .and_then(|h| h.exact_root.clone())
            .unwrap();
        let zf = MPoly::var(n, 0)
            .scale(&rho[0].conj())
            .add(&MPoly::var(n, 1).scale(&rho[1].conj()));
        let uf = MPoly::var(n, 2)
            .scale(&rho[0])
            .add(&MPoly::var(n, 3).scale(&rho[1]));
        assert_eq!(zf.pow(bf.power).mul(&bf.p_h), bf.numerator);
        assert_eq!(uf.pow(bf.power).mul(&bf.q_h), bf.p_h);
    }

    #[test]
    fn whole_group_complement_is_empty() {
        let g = groups::cyclic(2, [c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let bf = compute_b_factorization(&g, g.reflections[0]).unwrap();
        assert!(bf.numerator.is_zero());
        assert!(bf.l_indices.is_empty());
    }

    #[test]
    fn non_reflection_index_is_rejected() {
        let g = groups::family_g(2, 2).unwrap();
        let minus_id = g
            .elements
            .iter()
            .position(|e| (e.mat[0][0] + Complex64::new(1.0, 0.0)).norm() < 1e-12
                && (e.mat[1][1] + Complex64::new(1.0, 0.0)).norm() < 1e-12
                && e.mat[0][1].norm() < 1e-12)
            .unwrap();
        assert!(matches!(
            compute_b_factorization(&g, minus_id),
            Err(Error::NotReflection { .. })
        ));
    }

    #[test]
    fn peel_order_does_not_change_m() {
        let g = groups::family_g(2, 1).unwrap();
        let q = expand_q(&g).unwrap();
        let m_ref = compute_m_from(&g, &q).unwrap();
        // peel in reversed order, u side first
        let mut m = q;
        let forms = hyperplane_forms(&g).unwrap();
        for f in forms.iter().rev() {
            let (quot, ok) = exact_divide(&m, Side::U, &f.u_form, f.power).unwrap();
            assert!(ok);
            m = quot;
        }
        for f in forms.iter().rev() {
            let (quot, ok) = exact_divide(&m, Side::Z, &f.z_form, f.power).unwrap();
            assert!(ok);
            m = quot;
        }
        assert_eq!(m, m_ref);
    }

    #[test]
    fn trivial_group_numerator_is_one() {
        let g = groups::cyclic(1, [c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let q = expand_q(&g).unwrap();
        assert_eq!(q, MPoly::one(g.exponent));
        assert_eq!(compute_m(&g).unwrap(), q);
    }
}
