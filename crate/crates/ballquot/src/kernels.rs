//! Bergman kernels on the unit ball of `C^2` and their group averages.
//!
//! The plain ball kernel is `K(z, w) = c / (1 - <z, w>)^3` with
//! `<z, w> = z1*conj(w1) + z2*conj(w2)`; `c = 1` by default, or `2/pi^2`
//! (the reproducing normalization) when [`KernelConfig::normalized`] is set.
//! For a finite unitary group `G` the averaged kernel is
//! `K_G(z, w) = (1/|G|) sum_g det(g) K(g.z, w)`, and the weighted kernel
//! `k_{G,p}` twists `K_G` by `|J_pi|^{2/p - 1}` on the left slot and
//! `|J_pi|^{1 - 2/p}` on the right, where `J_pi` is the Jacobian of the
//! basic-invariant orbit map (a constant times the product of the reflecting
//! hyperplane forms).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::groups::{Mat2, ReflectionGroup, Vec2};

/// Volume of the unit ball in `C^2` (Lebesgue measure on `R^4`).
pub const BALL_VOLUME: f64 = PI * PI / 2.0;
/// Reproducing-kernel normalization `2/pi^2 = 1/vol(B_2)`.
pub const NORMALIZATION: f64 = 2.0 / (PI * PI);
/// Evaluations with `|1 - <g.z, w>|` below this are reported as singular.
const SINGULAR_FLOOR: f64 = 1e-300;

/// Hermitian pairing, linear in the first slot.
pub fn pairing(a: &Vec2, b: &Vec2) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj()
}

/// A point of the closed unit ball in `C^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallPoint {
    z: Vec2,
}

impl BallPoint {
    /// Wraps coordinates, rejecting points outside the closed ball
    /// (with a small rounding allowance).
    pub fn new(z1: Complex64, z2: Complex64) -> Result<BallPoint> {
        let n2 = z1.norm_sqr() + z2.norm_sqr();
        if n2 > 1.0 + 1e-12 {
            return Err(Error::OutsideBall { norm: n2.sqrt() });
        }
        Ok(BallPoint { z: [z1, z2] })
    }

    pub fn origin() -> BallPoint {
        BallPoint { z: [Complex64::new(0.0, 0.0); 2] }
    }

    pub fn coords(&self) -> &Vec2 {
        &self.z
    }

    pub fn z1(&self) -> Complex64 {
        self.z[0]
    }

    pub fn z2(&self) -> Complex64 {
        self.z[1]
    }

    pub fn norm(&self) -> f64 {
        (self.z[0].norm_sqr() + self.z[1].norm_sqr()).sqrt()
    }

    /// Distance to the unit sphere, clamped at zero.
    pub fn boundary_gap(&self) -> f64 {
        (1.0 - self.norm()).max(0.0)
    }

    /// Image under a unitary matrix (caller guarantees unitarity, which
    /// preserves ball membership).
    pub fn transform(&self, m: &Mat2) -> BallPoint {
        BallPoint { z: crate::groups::mat_apply(m, &self.z) }
    }

    /// Flattened `[re z1, im z1, re z2, im z2]`, the report/CLI exchange form.
    pub fn to_array(&self) -> [f64; 4] {
        [self.z[0].re, self.z[0].im, self.z[1].re, self.z[1].im]
    }

    pub fn from_array(a: [f64; 4]) -> Result<BallPoint> {
        BallPoint::new(Complex64::new(a[0], a[1]), Complex64::new(a[2], a[3]))
    }
}

/// Evaluation options shared by the kernel routines.
#[derive(Clone, Copy, Debug)]
pub struct KernelConfig {
    /// Multiply kernels by `2/pi^2` so the plain kernel reproduces
    /// holomorphic functions; off by default.
    pub normalized: bool,
    /// Lebesgue exponent for the weighted kernel, in `(1, infinity)`.
    pub p: f64,
    /// Modulus of the constant `c_pi` in front of the hyperplane-form
    /// product defining `J_pi`; only the modulus is observable here.
    pub jac_constant_modulus: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { normalized: false, p: 2.0, jac_constant_modulus: 1.0 }
    }
}

impl KernelConfig {
    pub fn with_p(p: f64) -> Result<KernelConfig> {
        let cfg = KernelConfig { p, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::BadDivisor(format!(
                "exponent p must lie in (1, infinity); got {}",
                self.p
            )));
        }
        if !(self.jac_constant_modulus > 0.0 && self.jac_constant_modulus.is_finite()) {
            return Err(Error::BadDivisor(format!(
                "|c_pi| must be positive and finite; got {}",
                self.jac_constant_modulus
            )));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        if self.normalized {
            NORMALIZATION
        } else {
            1.0
        }
    }
}

/// The two-dimensional ball kernel `c / (1 - <z, w>)^3`.
pub fn ball_kernel(z: &BallPoint, w: &BallPoint, cfg: &KernelConfig) -> Result<Complex64> {
    ball_kernel_shifted(z, w, cfg, 0)
}

/// Ball kernel with the singularity report attributed to group element
/// `index` (used by the averaged sums).
fn ball_kernel_shifted(
    z: &BallPoint,
    w: &BallPoint,
    cfg: &KernelConfig,
    index: usize,
) -> Result<Complex64> {
    let s = Complex64::new(1.0, 0.0) - pairing(z.coords(), w.coords());
    let n = s.norm();
    if n < SINGULAR_FLOOR {
        return Err(Error::SingularPoint { index, value: n });
    }
    Ok(Complex64::new(cfg.scale(), 0.0) / (s * s * s))
}

/// Group-averaged kernel `(1/|G|) sum_g det(g) K(g.z, w)`.
pub fn averaged_kernel(
    group: &ReflectionGroup,
    z: &BallPoint,
    w: &BallPoint,
    cfg: &KernelConfig,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, e) in group.elements.iter().enumerate() {
        let gz = z.transform(&e.mat);
        acc += e.det * ball_kernel_shifted(&gz, w, cfg, i)?;
    }
    Ok(acc / group.order() as f64)
}

/// The same average written on the right slot:
/// `(1/|G|) sum_g conj(det(g)) K(z, g.w)`. Equal to [`averaged_kernel`]
/// because `<g.z, w> = <z, g^{-1}.w>` and `g -> g^{-1}` reindexes the sum.
pub fn averaged_kernel_dual(
    group: &ReflectionGroup,
    z: &BallPoint,
    w: &BallPoint,
    cfg: &KernelConfig,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, e) in group.elements.iter().enumerate() {
        let gw = w.transform(&e.mat);
        acc += e.det.conj() * ball_kernel_shifted(z, &gw, cfg, i)?;
    }
    Ok(acc / group.order() as f64)
}

/// `sum_g |K(g.z, w)|`, the termwise majorant of `|G| * |K_G|`.
pub fn dominating_sum(
    group: &ReflectionGroup,
    z: &BallPoint,
    w: &BallPoint,
    cfg: &KernelConfig,
) -> Result<f64> {
    let mut acc = 0.0;
    for (i, e) in group.elements.iter().enumerate() {
        let gz = z.transform(&e.mat);
        acc += ball_kernel_shifted(&gz, w, cfg, i)?.norm();
    }
    Ok(acc)
}

/// Jacobian of the basic-invariant orbit map, as the hyperplane-form product
/// `c * prod_Y <z, rho_Y>^{m_Y - 1}`. The constant is taken real positive
/// with modulus [`KernelConfig::jac_constant_modulus`]; every consumer in
/// this crate only reads `|J_pi|`.
pub fn jacobian_product(group: &ReflectionGroup, z: &BallPoint, cfg: &KernelConfig) -> Complex64 {
    let mut acc = Complex64::new(cfg.jac_constant_modulus, 0.0);
    for h in &group.hyperplanes {
        let form = pairing(z.coords(), &h.root);
        for _ in 1..h.multiplicity {
            acc *= form;
        }
    }
    acc
}

/// Closed-form orbit-map Jacobian for `G(m, l, 2)`:
/// `(m^2 / l) (z1 z2)^{m/l - 1} (z1^m - z2^m)`.
pub fn closed_form_jacobian_gml(m: u32, l: u32, z: &BallPoint) -> Result<Complex64> {
    if m == 0 || l == 0 || m % l != 0 {
        return Err(Error::BadDivisor(format!(
            "closed-form Jacobian needs l | m, m, l >= 1; got m = {}, l = {}",
            m, l
        )));
    }
    let (z1, z2) = (z.z1(), z.z2());
    let prod = (z1 * z2).powu(m / l - 1);
    Ok(Complex64::new((m * m / l) as f64, 0.0) * prod * (z1.powu(m) - z2.powu(m)))
}

/// Weighted kernel `k_{G,p}(z, w) =
/// |J_pi(z)|^{2/p - 1} K_G(z, w) |J_pi(w)|^{1 - 2/p}`.
pub fn k_gp(
    group: &ReflectionGroup,
    z: &BallPoint,
    w: &BallPoint,
    cfg: &KernelConfig,
) -> Result<Complex64> {
    cfg.validate()?;
    let e_z = 2.0 / cfg.p - 1.0;
    let e_w = -e_z;
    let avg = averaged_kernel(group, z, w, cfg)?;
    Ok(weight_factor(group, z, e_z, cfg)? * weight_factor(group, w, e_w, cfg)? * avg)
}

fn weight_factor(
    group: &ReflectionGroup,
    x: &BallPoint,
    exponent: f64,
    cfg: &KernelConfig,
) -> Result<f64> {
    if exponent == 0.0 {
        return Ok(1.0); // p = 2 carries no weight, exactly
    }
    let j = jacobian_product(group, x, cfg).norm();
    if j == 0.0 && exponent < 0.0 {
        return Err(Error::JacobianZero { exponent });
    }
    Ok(j.powf(exponent))
}

/// The Lebesgue weight `sigma(z) = |J_pi(z)|^{2 - p}` transported from the
/// quotient; defined for any real `p >= 1` (not just the kernel range).
pub fn weight_sigma(group: &ReflectionGroup, z: &BallPoint, p: f64, cfg: &KernelConfig) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::BadDivisor(format!("weight exponent p must be >= 1; got {}", p)));
    }
    let e = 2.0 - p;
    if e == 0.0 {
        return Ok(1.0);
    }
    let j = jacobian_product(group, z, cfg).norm();
    if j == 0.0 && e < 0.0 {
        return Err(Error::JacobianZero { exponent: e });
    }
    Ok(j.powf(e))
}

/// Closed-form averaged kernel for the cyclic group `<diag(zeta_m, 1)>`,
/// valid on the tube `|z1 conj(w1)| < |1 - z2 conj(w2)| / 2`:
/// with `x = z1 conj(w1)`, `b = z2 conj(w2)`, `y = x / (1 - b)`,
///
/// `K = (1 - b)^{-3} y^{m-1} sum_{l >= 1} [(l m + 1)(l m)/2] y^{(l-1)m}`.
///
/// The series is the arithmetic subsequence `k = -1 (mod m)` of the binomial
/// expansion `(1 - y)^{-3} = sum_k (k+2)(k+1)/2 y^k`, which is what survives
/// the character average. Truncation stops once the geometric tail bound
/// drops below `1e-16` of the partial sum; exceeding `max_terms` reports
/// `NotConverged`.
pub fn cyclic_closed_form(
    m: u32,
    z: &BallPoint,
    w: &BallPoint,
    max_terms: usize,
    cfg: &KernelConfig,
) -> Result<Complex64> {
    if m == 0 {
        return Err(Error::BadDivisor("cyclic order must be >= 1".into()));
    }
    let x = z.z1() * w.z1().conj();
    let b = z.z2() * w.z2().conj();
    let one_b = Complex64::new(1.0, 0.0) - b;
    if !(x.norm() < 0.5 * one_b.norm()) {
        return Err(Error::OutsideRegion(format!(
            "|z1 conj(w1)| = {:.6e} not below |1 - z2 conj(w2)|/2 = {:.6e}",
            x.norm(),
            0.5 * one_b.norm()
        )));
    }
    let y = x / one_b;
    // prefactor (1-b)^{-3} y^{m-1} = x^{m-1} (1-b)^{-(m+2)}
    let pref = x.powu(m - 1) / one_b.powu(m + 2);
    if pref.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let ym = y.powu(m);
    let r_geom = ym.norm(); // < 1 on the region (|y| < 1/2 <= 1)
    let mut sum = Complex64::new(0.0, 0.0);
    let mut ypow = Complex64::new(1.0, 0.0);
    for l in 1..=max_terms {
        let lm = (l as u64) * (m as u64);
        let coeff = ((lm + 1) * lm) as f64 / 2.0;
        let term = coeff * ypow;
        sum += term;
        // coefficient ratios decrease toward 1, so the tail is dominated by
        // the geometric series with the current ratio
        let next_coeff = ((lm + m as u64 + 1) * (lm + m as u64)) as f64 / 2.0;
        let ratio = (next_coeff / coeff) * r_geom;
        if ratio < 1.0 {
            let tail = term.norm() * ratio / (1.0 - ratio);
            if tail <= 1e-16 * sum.norm() {
                return Ok(cfg.scale() * pref * sum);
            }
        }
        ypow *= ym;
    }
    Err(Error::NotConverged { limit: max_terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups;

    fn pt(a: f64, b: f64, c: f64, d: f64) -> BallPoint {
        BallPoint::new(Complex64::new(a, b), Complex64::new(c, d)).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn ball_membership_is_enforced() {
        assert!(BallPoint::new(Complex64::new(0.9, 0.0), Complex64::new(0.5, 0.0)).is_err());
        assert!(BallPoint::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).is_ok());
    }

    #[test]
    fn plain_kernel_known_values() {
        let cfg = KernelConfig::default();
        let z = pt(0.0, 0.0, 0.0, 0.0);
        let k = ball_kernel(&z, &z, &cfg).unwrap();
        assert!(close(k, Complex64::new(1.0, 0.0), 1e-15));
        // K((r,0),(r,0)) = (1-r^2)^{-3}
        let r = 0.7;
        let zr = pt(r, 0.0, 0.0, 0.0);
        let k = ball_kernel(&zr, &zr, &cfg).unwrap();
        assert!(close(k, Complex64::new((1.0 - r * r).powi(-3), 0.0), 1e-13));
        // normalization multiplies by 2/pi^2
        let cfg_n = KernelConfig { normalized: true, ..cfg };
        let kn = ball_kernel(&zr, &zr, &cfg_n).unwrap();
        assert!(close(kn, k * NORMALIZATION, 1e-14));
    }

    #[test]
    fn averaged_kernel_matches_its_dual_form() {
        let g = groups::family_g(2, 1).unwrap();
        let cfg = KernelConfig::default();
        let z = pt(0.31, -0.12, 0.44, 0.05);
        let w = pt(-0.2, 0.33, 0.1, -0.41);
        let a = averaged_kernel(&g, &z, &w, &cfg).unwrap();
        let b = averaged_kernel_dual(&g, &z, &w, &cfg).unwrap();
        assert!(close(a, b, 1e-13), "{} vs {}", a, b);
    }

    #[test]
    fn averaged_kernel_is_hermitian() {
        let g = groups::family_g(3, 3).unwrap();
        let cfg = KernelConfig::default();
        let z = pt(0.25, 0.1, -0.3, 0.2);
        let w = pt(0.1, -0.44, 0.2, 0.3);
        let a = averaged_kernel(&g, &z, &w, &cfg).unwrap();
        let b = averaged_kernel(&g, &w, &z, &cfg).unwrap();
        assert!(close(a, b.conj(), 1e-13));
    }

    #[test]
    fn averaged_kernel_transformation_law() {
        // K_G(g.z, w) = det(g)^{-1} K_G(z, w)
        let g = groups::family_g(4, 2).unwrap();
        let cfg = KernelConfig::default();
        let z = pt(0.31, -0.12, 0.24, 0.05);
        let w = pt(-0.2, 0.13, 0.1, -0.21);
        let base = averaged_kernel(&g, &z, &w, &cfg).unwrap();
        for idx in [1usize, 3, 5] {
            let e = &g.elements[idx % g.order()];
            let gz = z.transform(&e.mat);
            let moved = averaged_kernel(&g, &gz, &w, &cfg).unwrap();
            assert!(close(moved, base / e.det, 1e-12));
        }
    }

    #[test]
    fn alternating_sum_cancels_at_the_origin_for_g212() {
        let g = groups::family_g(2, 1).unwrap();
        let cfg = KernelConfig::default();
        let o = BallPoint::origin();
        let k = averaged_kernel(&g, &o, &o, &cfg).unwrap();
        assert!(k.norm() < 1e-15, "determinant characters sum to zero at 0, got {}", k);
    }

    #[test]
    fn jacobian_closed_form_is_proportional_to_the_root_product() {
        let (m, l) = (2u32, 1u32);
        let g = groups::family_g(m, l).unwrap();
        let cfg = KernelConfig::default();
        let mut ratio0 = None;
        for k in 0..50 {
            let t = 0.07 + 0.015 * k as f64;
            let z = pt(t.sin() * 0.4, 0.2 * t.cos(), 0.3 * (1.7 * t).sin(), 0.25 * (0.9 * t).cos());
            let closed = closed_form_jacobian_gml(m, l, &z).unwrap();
            let prod = jacobian_product(&g, &z, &cfg);
            if prod.norm() < 1e-12 {
                continue;
            }
            let r = closed / prod;
            match ratio0 {
                None => ratio0 = Some(r),
                Some(r0) => assert!(
                    (r - r0).norm() <= 1e-10 * r0.norm(),
                    "ratio drifts: {} vs {}",
                    r,
                    r0
                ),
            }
        }
        assert!(ratio0.is_some());
    }

    #[test]
    fn weighted_kernel_reduces_to_the_average_at_p_two() {
        let g = groups::family_g(2, 2).unwrap();
        let cfg = KernelConfig::default();
        let z = pt(0.3, 0.0, 0.1, 0.2);
        let w = pt(0.0, 0.25, -0.3, 0.1);
        let a = k_gp(&g, &z, &w, &cfg).unwrap();
        let b = averaged_kernel(&g, &z, &w, &cfg).unwrap();
        assert_eq!(a, b, "p = 2 weights must be exactly 1");
    }

    #[test]
    fn sigma_weight_example_with_pinned_constant() {
        // G(2,2,2): hyperplane forms (z1 -+ z2)/sqrt(2); with |c_pi| = 4 the
        // modulus matches the closed form |2(z1^2 - z2^2)| and sigma((1,0)), p=1
        // evaluates to 2.
        let g = groups::family_g(2, 2).unwrap();
        let cfg = KernelConfig { jac_constant_modulus: 4.0, ..Default::default() };
        let z = pt(1.0, 0.0, 0.0, 0.0);
        let s = weight_sigma(&g, &z, 1.0, &cfg).unwrap();
        assert!((s - 2.0).abs() < 1e-12, "sigma = {}", s);
        // p = 2 is weightless regardless of the constant
        assert_eq!(weight_sigma(&g, &z, 2.0, &cfg).unwrap(), 1.0);
        // p > 2 diverges on a hyperplane
        let on_wall = pt(0.5, 0.0, 0.5, 0.0);
        assert!(matches!(
            weight_sigma(&g, &on_wall, 3.0, &cfg),
            Err(Error::JacobianZero { .. })
        ));
    }

    #[test]
    fn cyclic_closed_form_reduces_to_plain_kernel_at_m_one() {
        let g = groups::cyclic(1, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(g.order(), 1);
        let cfg = KernelConfig::default();
        let z = pt(0.2, 0.1, 0.5, -0.1);
        let w = pt(0.3, -0.2, 0.4, 0.2);
        let series = cyclic_closed_form(1, &z, &w, 400, &cfg).unwrap();
        let direct = ball_kernel(&z, &w, &cfg).unwrap();
        assert!(close(series, direct, 1e-13), "{} vs {}", series, direct);
    }

    #[test]
    fn cyclic_closed_form_matches_the_two_term_average() {
        // m = 2 on real points reduces to (1/2)[(1-x-b)^{-3} - (1+x-b)^{-3}]
        let cfg = KernelConfig::default();
        let z = pt(0.1f64.sqrt(), 0.0, 0.5f64.sqrt(), 0.0);
        let w = pt(0.1f64.sqrt(), 0.0, 0.5f64.sqrt(), 0.0);
        // x = 0.1, b = 0.5
        let series = cyclic_closed_form(2, &z, &w, 400, &cfg).unwrap();
        let expected = 0.5 * ((0.4f64).powi(-3) - (0.6f64).powi(-3));
        assert!(
            (series - Complex64::new(expected, 0.0)).norm() < 1e-12,
            "{} vs {}",
            series,
            expected
        );
    }

    #[test]
    fn cyclic_closed_form_enforces_its_region() {
        let cfg = KernelConfig::default();
        let z = pt(0.7, 0.0, 0.0, 0.0);
        let w = pt(0.7, 0.0, 0.0, 0.0);
        // x = 0.49, |1-b|/2 = 0.5 -> inside; push b up to shrink the bound
        assert!(cyclic_closed_form(2, &z, &w, 400, &cfg).is_ok());
        let z = pt(0.6, 0.0, 0.5, 0.0);
        let w = pt(0.6, 0.0, 0.5, 0.0);
        // x = 0.36, |1-b|/2 = 0.375 -> still inside
        assert!(cyclic_closed_form(2, &z, &w, 400, &cfg).is_ok());
        let z = pt(0.6, 0.0, 0.6, 0.0);
        let w = pt(0.6, 0.0, 0.6, 0.0);
        // x = 0.36, |1-b|/2 = 0.32 -> outside
        assert!(matches!(
            cyclic_closed_form(2, &z, &w, 400, &cfg),
            Err(Error::OutsideRegion(_))
        ));
    }

    #[test]
    fn singular_evaluation_is_reported_not_returned() {
        let cfg = KernelConfig::default();
        let z = BallPoint::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert!(matches!(
            ball_kernel(&z, &z, &cfg),
            Err(Error::SingularPoint { .. })
        ));
    }
}
