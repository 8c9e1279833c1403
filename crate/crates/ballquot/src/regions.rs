//! Near-diagonal region geometry on the ball.
//!
//! For a unitary `g` and `eps > 0` the pair region `U_g(eps)` collects the
//! `(z, w)` with `d(z) + d(w) + |g.z - w| < eps` (here `d` is the distance to
//! the sphere, `1 - |.|`), and `S_g(eps)` the pairs with
//! `|1 - <g.z, w>| < eps`. The audits in this module probe how these regions
//! nest, when two of them can meet, and how close to a reflection hyperplane
//! their members must sit. Every audit is a sampling harness: it can refute a
//! claim with a witness but can only fail to refute emptiness.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{is_reflection, GroupElement, Mat2, ReflectionGroup, Vec2};
use crate::kernels::{pairing, BallPoint};
use crate::sampling::{log_uniform, point_at_gap, project_into_ball, stream, tag, unit_direction};

/// Default grid for [`disjointness_search`], descending.
pub const DEFAULT_EPS_GRID: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];

/// Euclidean distance between two points of `C^2`.
pub fn point_distance(a: &BallPoint, b: &BallPoint) -> f64 {
    let ac = a.coords();
    let bc = b.coords();
    ((ac[0] - bc[0]).norm_sqr() + (ac[1] - bc[1]).norm_sqr()).sqrt()
}

/// Membership in `U_g(eps)`.
pub fn in_u(g: &Mat2, eps: f64, z: &BallPoint, w: &BallPoint) -> bool {
    let gz = z.transform(g);
    z.boundary_gap() + w.boundary_gap() + point_distance(&gz, w) < eps
}

/// Membership in `S_g(eps)`.
pub fn in_s(g: &Mat2, eps: f64, z: &BallPoint, w: &BallPoint) -> bool {
    let gz = z.transform(g);
    (Complex64::new(1.0, 0.0) - pairing(gz.coords(), w.coords())).norm() < eps
}

/// One membership question: an element, a scale, and a pair of points.
#[derive(Clone, Debug)]
pub struct RegionQuery {
    pub g: GroupElement,
    pub epsilon: f64,
    pub z: BallPoint,
    pub w: BallPoint,
}

impl RegionQuery {
    pub fn new(g: GroupElement, epsilon: f64, z: BallPoint, w: BallPoint) -> RegionQuery {
        assert!(epsilon > 0.0, "region scale must be positive");
        RegionQuery { g, epsilon, z, w }
    }

    pub fn in_u(&self) -> bool {
        in_u(&self.g.mat, self.epsilon, &self.z, &self.w)
    }

    pub fn in_s(&self) -> bool {
        in_s(&self.g.mat, self.epsilon, &self.z, &self.w)
    }
}

// ---------------------------------------------------------------------------
// displacement constants
// ---------------------------------------------------------------------------

/// How far a reflection moves a point, measured against the root pairing:
/// `|r.z - z| = c_r * |<z, rho>|` with `c_r = 2*sin(theta_r / 2)` exactly
/// (from the eigen-decomposition `r.z = z - (1 - lambda)<z, rho>rho`, where
/// `|1 - lambda| = 2*sin(theta/2)` for `lambda = e^{i theta}`).
#[derive(Clone, Debug, Serialize)]
pub struct PerReflection {
    pub index: usize,
    pub angle: f64,
    pub constant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DisplacementConstants {
    /// Smallest per-reflection constant.
    pub c1: f64,
    /// Largest per-reflection constant; `0 < c1 <= c2 <= 2`.
    pub c2: f64,
    pub per_reflection: Vec<PerReflection>,
}

pub fn displacement_constants(group: &ReflectionGroup) -> Result<DisplacementConstants> {
    if group.reflections.is_empty() {
        return Err(Error::NoReflections);
    }
    let mut per = Vec::new();
    for &i in &group.reflections {
        let data = is_reflection(&group.elements[i].mat).expect("listed reflection");
        per.push(PerReflection {
            index: i,
            angle: data.angle,
            constant: 2.0 * (data.angle / 2.0).sin(),
        });
    }
    let c1 = per.iter().map(|p| p.constant).fold(f64::INFINITY, f64::min);
    let c2 = per.iter().map(|p| p.constant).fold(0.0, f64::max);
    Ok(DisplacementConstants { c1, c2, per_reflection: per })
}

// ---------------------------------------------------------------------------
// nesting audit
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ElementNesting {
    pub index: usize,
    pub u_members: u64,
    pub s_members: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NestingReport {
    pub group: String,
    pub epsilon: f64,
    pub samples_per_inclusion: u64,
    /// Sampled members of `U_g(eps)` over all `g`.
    pub u_members: u64,
    /// Members of `U_g(eps)` that escaped `S_g(3 eps)` — must be zero.
    pub first_violations: u64,
    /// Sampled members of `S_g(3 eps)` over all `g`.
    pub s_members: u64,
    /// Radially-sampled members of `S_g(3 eps)` that escaped `U_g(12 eps)` —
    /// must be zero (see the note on `in_s` sampling below).
    pub second_violations: u64,
    pub per_element: Vec<ElementNesting>,
}

/// Radial pair sampler aimed at the thin near-boundary geometry: `z` at a
/// log-uniform gap below the sphere, `w = g.z + delta` with log-uniform
/// `|delta|`, projected back into the closed ball. Both region families have
/// measure concentrated here; uniform ball pairs essentially never land in
/// them.
fn radial_pair(
    g: &Mat2,
    gap_hi: f64,
    delta_hi: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> (BallPoint, BallPoint) {
    let lo = (gap_hi * 1e-6).min(1e-6).max(1e-12);
    let gap = log_uniform(rng, lo, gap_hi);
    let z = point_at_gap(rng, gap);
    let gz = z.transform(g);
    let delta = log_uniform(rng, lo, delta_hi);
    let dir = unit_direction(rng);
    let w = project_into_ball([gz.z1() + dir[0] * delta, gz.z2() + dir[1] * delta]);
    (z, w)
}

/// Checks the two nestings `U_g(eps) ⊆ S_g(3 eps)` and (for radially sampled
/// pairs) `S_g(3 eps) ⊆ U_g(12 eps)` for every `g` in the group.
///
/// The first inclusion holds for arbitrary pairs:
/// `|1 - <g.z,w>| <= 2 d(z) + |g.z - w| < 2 eps`. The second is checked on
/// the radial sampler with `|delta| <= 3 eps`: membership in `S_g(3 eps)`
/// forces `d(z) + d(w) <= 2|1 - <g.z,w>| < 6 eps`, and projection at most
/// doubles the offset, so the `U`-sum stays below `12 eps`. Tangentially
/// separated pairs can genuinely escape `U_g(12 eps)` while staying in
/// `S_g(3 eps)`; see `tangential_pairs_escape_the_fixed_multiple` in the
/// tests for the sharp form of the second inclusion.
pub fn nesting_audit(
    group: &ReflectionGroup,
    eps: f64,
    sample_count: u64,
    seed: u64,
) -> NestingReport {
    assert!(eps > 0.0);
    let n = group.order() as u64;
    let per_g = (sample_count / n).max(16);
    let mut per_element = Vec::new();
    let (mut u_members, mut first_violations) = (0u64, 0u64);
    let (mut s_members, mut second_violations) = (0u64, 0u64);

    for (gi, elem) in group.elements.iter().enumerate() {
        let g = elem.mat;
        let tag_a = tag(&format!("nesting:first:{gi}"));
        let tag_b = tag(&format!("nesting:second:{gi}"));

        // first inclusion: aim at U_g(eps), every member must be in S_g(3 eps)
        let first: Vec<(bool, bool)> = (0..per_g)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream(seed, tag_a, j);
                let (z, w) = radial_pair(&g, eps, eps, &mut rng);
                let member = in_u(&g, eps, &z, &w);
                let ok = !member || in_s(&g, 3.0 * eps, &z, &w);
                (member, ok)
            })
            .collect();

        // second inclusion: aim at S_g(3 eps) with radial offsets <= 3 eps
        let second: Vec<(bool, bool)> = (0..per_g)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream(seed, tag_b, j);
                let (z, w) = radial_pair(&g, 3.0 * eps, 3.0 * eps, &mut rng);
                let member = in_s(&g, 3.0 * eps, &z, &w);
                let ok = !member || in_u(&g, 12.0 * eps, &z, &w);
                (member, ok)
            })
            .collect();

        let mut eu = 0u64;
        for &(m, ok) in &first {
            eu += m as u64;
            first_violations += !ok as u64;
        }
        let mut es = 0u64;
        for &(m, ok) in &second {
            es += m as u64;
            second_violations += !ok as u64;
        }
        u_members += eu;
        s_members += es;
        per_element.push(ElementNesting { index: gi, u_members: eu, s_members: es });
    }

    NestingReport {
        group: group.name.clone(),
        epsilon: eps,
        samples_per_inclusion: per_g * n,
        u_members,
        first_violations,
        s_members,
        second_violations,
        per_element,
    }
}

// ---------------------------------------------------------------------------
// disjointness search
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct GridCell {
    pub epsilon: f64,
    pub samples: u64,
    pub hits: u64,
    /// First common point found at this scale, if any.
    pub witness: Option<([f64; 4], [f64; 4])>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DisjointnessReport {
    pub group: String,
    pub g_index: usize,
    pub l_index: usize,
    pub quotient_index: usize,
    pub grid: Vec<GridCell>,
    /// Largest grid scale at which no common point was sampled.
    pub largest_empty: Option<f64>,
}

/// Looks for pairs common to `U_g(eps)` and `U_l(eps)` over a descending
/// `eps` grid. When `l^{-1} g` is neither the identity nor a reflection its
/// fixed-point set misses the sphere, the two regions separate at small
/// scales, and the search should come back empty; a hit at some scale is a
/// genuine witness that the scale is still too coarse.
pub fn disjointness_search(
    group: &ReflectionGroup,
    g_index: usize,
    l_index: usize,
    eps_grid: &[f64],
    sample_count: u64,
    seed: u64,
) -> Result<DisjointnessReport> {
    let quotient = group.product_index(group.inverse_index(l_index), g_index);
    if quotient == group.identity_index() {
        return Err(Error::IsIdentity);
    }
    if group.reflections.contains(&quotient) {
        return Err(Error::IsReflection);
    }
    let g = group.elements[g_index].mat;
    let l = group.elements[l_index].mat;

    let mut grid: Vec<f64> = eps_grid.to_vec();
    grid.sort_by(|a, b| b.partial_cmp(a).expect("finite grid"));

    let mut cells = Vec::new();
    let mut largest_empty = None;
    for (k, &eps) in grid.iter().enumerate() {
        let t = tag(&format!("disjoint:{k}"));
        let results: Vec<Option<(BallPoint, BallPoint)>> = (0..sample_count)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream(seed, t, j);
                // alternate the anchor so both regions get direct coverage
                let anchor = if j % 2 == 0 { &g } else { &l };
                let (z, w) = radial_pair(anchor, eps, eps, &mut rng);
                if in_u(&g, eps, &z, &w) && in_u(&l, eps, &z, &w) {
                    Some((z, w))
                } else {
                    None
                }
            })
            .collect();
        let hits = results.iter().filter(|r| r.is_some()).count() as u64;
        let witness = results
            .iter()
            .flatten()
            .next()
            .map(|(z, w)| (z.to_array(), w.to_array()));
        if hits == 0 && largest_empty.is_none() {
            largest_empty = Some(eps);
        }
        cells.push(GridCell { epsilon: eps, samples: sample_count, hits, witness });
    }

    Ok(DisjointnessReport {
        group: group.name.clone(),
        g_index,
        l_index,
        quotient_index: quotient,
        grid: cells,
        largest_empty,
    })
}

// ---------------------------------------------------------------------------
// intersection witnesses
// ---------------------------------------------------------------------------

/// Unit vector spanning the hyperplane orthogonal to `rho`.
pub fn hyperplane_direction(rho: &Vec2) -> Vec2 {
    [-rho[1].conj(), rho[0].conj()]
}

/// The constructive common point of `U_{l r}(eps)` and `U_l(eps)` for a
/// reflection `r`: take `z` on the hyperplane of `r` at gap `eps/4` below
/// the sphere and pair it with `l.z`. Both sums collapse because `r` fixes
/// `z`, leaving only the two gap terms (`eps/2 < eps`).
pub fn witness_pair(
    group: &ReflectionGroup,
    l_index: usize,
    r_index: usize,
    eps: f64,
) -> Result<(BallPoint, BallPoint)> {
    assert!(eps > 0.0);
    let data = is_reflection(&group.elements[r_index].mat)
        .ok_or(Error::NotReflection { index: r_index })?;
    let v = hyperplane_direction(&data.root);
    let gap = (eps / 4.0).min(0.9);
    let z = BallPoint::new(v[0] * (1.0 - gap), v[1] * (1.0 - gap))?;
    let w = z.transform(&group.elements[l_index].mat);
    Ok((z, w))
}

// ---------------------------------------------------------------------------
// triple intersections
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct TripleWitness {
    pub g_index: usize,
    pub h_index: usize,
    pub quotient_index: usize,
    pub z: [f64; 4],
    pub w: [f64; 4],
    /// Whether the constructed pair passed all three membership tests.
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TripleReport {
    pub group: String,
    pub epsilon: f64,
    /// True when every reflection in the group has order 2.
    pub all_order_two: bool,
    /// Distinct reflection pairs `(g, h)` whose quotient `g^{-1} h` is again
    /// a reflection — exactly the configurations admitting a triple point.
    pub qualifying_pairs: Vec<TripleWitness>,
    pub scanned_pairs: usize,
    pub samples: u64,
    /// Sampled pairs landing in `U_g ∩ U_h ∩ U_id` for some scanned `(g, h)`.
    pub triple_hits: u64,
    pub hit_example: Option<([f64; 4], [f64; 4])>,
}

/// Probes intersections of three regions `U_g(eps) ∩ U_h(eps) ∩ U_id(eps)`
/// for distinct reflections `g, h`. Such a triple needs `g^{-1} h` to be a
/// reflection as well, which forces a shared hyperplane in this family; when
/// every reflection has order 2 no configuration qualifies and the sampler
/// should find nothing. For higher-order reflections the witness is a
/// hyperplane point paired with itself.
pub fn triple_intersection_audit(
    group: &ReflectionGroup,
    eps: f64,
    sample_count: u64,
    seed: u64,
) -> TripleReport {
    assert!(eps > 0.0);
    let refl = &group.reflections;
    let all_order_two = refl.iter().all(|&i| group.elements[i].order == 2);

    // enumerate unordered pairs and their quotient status
    let mut pairs = Vec::new();
    let mut qualifying = Vec::new();
    for (a, &i) in refl.iter().enumerate() {
        for &j in &refl[a + 1..] {
            let quotient = group.product_index(group.inverse_index(i), j);
            let qualifies = refl.contains(&quotient);
            pairs.push((i, j));
            if !qualifies {
                continue;
            }
            // shared hyperplane: a fixed near-boundary point paired with
            // itself lies in all three regions
            let data = is_reflection(&group.elements[i].mat).expect("reflection");
            let v = hyperplane_direction(&data.root);
            let gap = (eps / 4.0).min(0.9);
            let z = BallPoint::new(v[0] * (1.0 - gap), v[1] * (1.0 - gap))
                .expect("inside by construction");
            let g = &group.elements[i].mat;
            let h = &group.elements[j].mat;
            let id = crate::groups::mat_identity();
            let verified = in_u(g, eps, &z, &z) && in_u(h, eps, &z, &z) && in_u(&id, eps, &z, &z);
            qualifying.push(TripleWitness {
                g_index: i,
                h_index: j,
                quotient_index: quotient,
                z: z.to_array(),
                w: z.to_array(),
                verified,
            });
        }
    }

    // random scan over every pair, equal budget each
    let mut triple_hits = 0u64;
    let mut hit_example = None;
    let mut samples = 0u64;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let per_pair = (sample_count / pairs.len().max(1) as u64).max(16);
        samples += per_pair;
        let g = group.elements[i].mat;
        let h = group.elements[j].mat;
        let root_g = is_reflection(&g).expect("reflection").root;
        let root_h = is_reflection(&h).expect("reflection").root;
        let t = tag(&format!("triple:{k}"));
        let hits: Vec<Option<(BallPoint, BallPoint)>> = (0..per_pair)
            .into_par_iter()
            .map(|s| {
                let mut rng = stream(seed, t, s);
                let lo = (eps * 1e-6).min(1e-6).max(1e-12);
                // bias a third of the draws toward each hyperplane
                let z = match s % 3 {
                    0 => {
                        let gap = log_uniform(&mut rng, lo, eps);
                        point_at_gap(&mut rng, gap)
                    }
                    rem => {
                        let root = if rem == 1 { &root_g } else { &root_h };
                        let v = hyperplane_direction(root);
                        let xi = log_uniform(&mut rng, lo, eps);
                        let tangent = (1.0 - xi * xi).sqrt();
                        let gap = log_uniform(&mut rng, lo, eps);
                        let r = 1.0 - gap;
                        project_into_ball([
                            (v[0] * tangent + root[0] * xi) * r,
                            (v[1] * tangent + root[1] * xi) * r,
                        ])
                    }
                };
                let anchor = match s % 3 {
                    0 => z.clone(),
                    1 => z.transform(&g),
                    _ => z.transform(&h),
                };
                let delta = log_uniform(&mut rng, lo, eps);
                let dir = unit_direction(&mut rng);
                let w = project_into_ball([
                    anchor.z1() + dir[0] * delta,
                    anchor.z2() + dir[1] * delta,
                ]);
                let id = crate::groups::mat_identity();
                if in_u(&g, eps, &z, &w) && in_u(&h, eps, &z, &w) && in_u(&id, eps, &z, &w) {
                    Some((z, w))
                } else {
                    None
                }
            })
            .collect();
        for hit in hits.into_iter().flatten() {
            triple_hits += 1;
            if hit_example.is_none() {
                hit_example = Some((hit.0.to_array(), hit.1.to_array()));
            }
        }
    }

    TripleReport {
        group: group.name.clone(),
        epsilon: eps,
        all_order_two,
        qualifying_pairs: qualifying,
        scanned_pairs: pairs.len(),
        samples,
        triple_hits,
        hit_example,
    }
}

// ---------------------------------------------------------------------------
// slab audit
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SlabReport {
    pub group: String,
    pub reflection_index: usize,
    pub angle: f64,
    /// Displacement constant of this reflection (its own `C1 = C2`).
    pub constant: f64,
    pub epsilon: f64,
    /// The slab half-width `2 eps / C1`.
    pub bound: f64,
    pub samples: u64,
    pub members: u64,
    pub violations: u64,
    /// Largest observed `|<z, rho>| / bound` and `|<w, rho>| / bound` over
    /// the members; both must stay at or below 1.
    pub max_z_ratio: f64,
    pub max_w_ratio: f64,
}

/// Samples `U_r(eps) ∩ U_id(eps)` for a reflection `r` and verifies that both
/// coordinates of every member stay inside the root slab
/// `|<., rho>| <= 2 eps / C1`. Membership gives `|r.z - z| < 2 eps`, the
/// displacement identity converts that to the `z` bound, and the symmetric
/// pair `(w, z) ∈ U_{r^{-1}} ∩ U_id` gives the `w` bound (a reflection and
/// its inverse share the root and the constant).
pub fn slab_audit(
    group: &ReflectionGroup,
    r_index: usize,
    eps: f64,
    sample_count: u64,
    seed: u64,
) -> Result<SlabReport> {
    assert!(eps > 0.0);
    let data = is_reflection(&group.elements[r_index].mat)
        .ok_or(Error::NotReflection { index: r_index })?;
    let constant = 2.0 * (data.angle / 2.0).sin();
    let bound = 2.0 * eps / constant;
    let r = group.elements[r_index].mat;
    let root = data.root;
    let v = hyperplane_direction(&root);
    let t = tag("slab");

    let results: Vec<Option<(f64, f64)>> = (0..sample_count)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, t, j);
            let lo = (eps * 1e-8).min(1e-8).max(1e-14);
            // place z near the hyperplane and near the sphere, w near z or r.z
            let xi = log_uniform(&mut rng, lo, (1.5 * bound).min(0.9));
            let tangent = (1.0 - xi * xi).sqrt();
            let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let gap = log_uniform(&mut rng, lo, eps);
            let radius = 1.0 - gap;
            let z = project_into_ball([
                (v[0] * tangent + root[0] * xi * phase) * radius,
                (v[1] * tangent + root[1] * xi * phase) * radius,
            ]);
            let anchor = if j % 2 == 0 { z.clone() } else { z.transform(&r) };
            let delta = log_uniform(&mut rng, lo, eps);
            let dir = unit_direction(&mut rng);
            let w = project_into_ball([
                anchor.z1() + dir[0] * delta,
                anchor.z2() + dir[1] * delta,
            ]);
            let id = crate::groups::mat_identity();
            if in_u(&r, eps, &z, &w) && in_u(&id, eps, &z, &w) {
                let pz = pairing(z.coords(), &root).norm();
                let pw = pairing(w.coords(), &root).norm();
                Some((pz, pw))
            } else {
                None
            }
        })
        .collect();

    let mut members = 0u64;
    let mut violations = 0u64;
    let (mut max_z, mut max_w) = (0.0f64, 0.0f64);
    for (pz, pw) in results.into_iter().flatten() {
        members += 1;
        if pz > bound || pw > bound {
            violations += 1;
        }
        max_z = max_z.max(pz / bound);
        max_w = max_w.max(pw / bound);
    }

    Ok(SlabReport {
        group: group.name.clone(),
        reflection_index: r_index,
        angle: data.angle,
        constant,
        epsilon: eps,
        bound,
        samples: sample_count,
        members,
        violations,
        max_z_ratio: max_z,
        max_w_ratio: max_w,
    })
}

// ---------------------------------------------------------------------------
// transport and intersection sampling (used by the estimate audits)
// ---------------------------------------------------------------------------

/// The unitary change of coordinates sending `U_g(eps) ∩ U_h(eps)` onto
/// `U_{g h^{-1}}(eps) ∩ U_id(eps)`: `(z, w) -> (h.z, w)`. Every summand of
/// both membership sums is preserved, so membership transports exactly.
pub fn transport(group: &ReflectionGroup, h_index: usize, z: &BallPoint, w: &BallPoint) -> (BallPoint, BallPoint) {
    (z.transform(&group.elements[h_index].mat), w.clone())
}

/// Draws one candidate pair aimed at `U_g(eps) ∩ U_h(eps)` when the quotient
/// `h^{-1} g` is a reflection: `z` hugs the quotient's hyperplane near the
/// sphere, `w` hugs `g.z` or `h.z`. Callers must still filter by membership.
pub fn intersection_candidate(
    group: &ReflectionGroup,
    g_index: usize,
    h_index: usize,
    eps: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(BallPoint, BallPoint)> {
    let quotient = group.product_index(group.inverse_index(h_index), g_index);
    let data = is_reflection(&group.elements[quotient].mat)
        .ok_or(Error::NotReflection { index: quotient })?;
    let root = data.root;
    let v = hyperplane_direction(&root);
    let lo = (eps * 1e-8).min(1e-8).max(1e-14);
    let xi = log_uniform(rng, lo, (eps / 2.0).min(0.9));
    let tangent = (1.0 - xi * xi).sqrt();
    let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    let gap = log_uniform(rng, lo, eps / 2.0);
    let radius = 1.0 - gap;
    let z = project_into_ball([
        (v[0] * tangent + root[0] * xi * phase) * radius,
        (v[1] * tangent + root[1] * xi * phase) * radius,
    ]);
    let anchor = if rng.gen::<bool>() {
        z.transform(&group.elements[g_index].mat)
    } else {
        z.transform(&group.elements[h_index].mat)
    };
    let delta = log_uniform(rng, lo, eps / 2.0);
    let dir = unit_direction(rng);
    let w = project_into_ball([anchor.z1() + dir[0] * delta, anchor.z2() + dir[1] * delta]);
    Ok((z, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{cyclic, family_g, mat_identity};
    use crate::sampling::uniform_ball;

    fn order_three_cyclic() -> ReflectionGroup {
        cyclic(3, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap()
    }

    #[test]
    fn membership_matches_the_defining_sums() {
        let id = mat_identity();
        let z = BallPoint::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        // d(z) = 0.4 twice, offset 0 -> sum 0.8
        assert!(in_u(&id, 0.81, &z, &z));
        assert!(!in_u(&id, 0.79, &z, &z));
        // |1 - 0.36| = 0.64
        assert!(in_s(&id, 0.65, &z, &z));
        assert!(!in_s(&id, 0.63, &z, &z));
        let origin = BallPoint::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert!(!in_u(&id, 1.0, &origin, &origin)); // gaps alone sum to 2
        assert!(in_s(&id, 1.01, &origin, &origin));
        assert!(!in_s(&id, 0.99, &origin, &origin));
    }

    #[test]
    fn sphere_pairs_belong_to_every_scale() {
        let id = mat_identity();
        let z = BallPoint::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        for eps in [1e-9, 1e-3, 0.5] {
            assert!(in_u(&id, eps, &z, &z));
            assert!(in_s(&id, eps, &z, &z));
        }
    }

    #[test]
    fn displacement_constants_match_the_sampled_identity() {
        let group = family_g(2, 1).unwrap();
        let consts = displacement_constants(&group).unwrap();
        assert!((consts.c1 - 2.0).abs() < 1e-12);
        assert!((consts.c2 - 2.0).abs() < 1e-12);
        // |r.z - z| = c_r |<z, rho>| pointwise, for every reflection
        for group in [family_g(2, 1).unwrap(), order_three_cyclic(), family_g(6, 2).unwrap()] {
            let consts = displacement_constants(&group).unwrap();
            for p in &consts.per_reflection {
                let r = &group.elements[p.index].mat;
                let root = is_reflection(r).unwrap().root;
                for i in 0..200u64 {
                    let mut rng = stream(5, tag("disp"), i);
                    let z = uniform_ball(&mut rng);
                    let moved = point_distance(&z.transform(r), &z);
                    let paired = pairing(z.coords(), &root).norm();
                    assert!(
                        (moved - p.constant * paired).abs() < 1e-12,
                        "displacement identity failed: {} vs {}",
                        moved,
                        p.constant * paired
                    );
                }
            }
        }
    }

    #[test]
    fn order_three_constant_is_root_three() {
        let group = order_three_cyclic();
        let consts = displacement_constants(&group).unwrap();
        // 2 sin(pi/3) = sqrt(3), both rotation angles give the same sine
        assert!((consts.c1 - 3.0f64.sqrt()).abs() < 1e-12);
        assert!((consts.c2 - 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn no_reflections_is_reported() {
        let group = crate::groups::close_generators(&[[[
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ], [
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]]])
        .unwrap();
        assert!(matches!(displacement_constants(&group), Err(Error::NoReflections)));
    }

    #[test]
    fn nesting_has_no_violations_on_small_runs() {
        for group in [crate::groups::trivial_group(), family_g(2, 2).unwrap()] {
            for eps in [0.05, 0.01] {
                let report = nesting_audit(&group, eps, 4_000, 7);
                assert_eq!(report.first_violations, 0, "{} eps {}", group.name, eps);
                assert_eq!(report.second_violations, 0, "{} eps {}", group.name, eps);
                assert!(report.u_members > 0);
                assert!(report.s_members > 0);
            }
        }
    }

    #[test]
    fn tangential_pairs_escape_the_fixed_multiple() {
        // A boundary pair separated tangentially: in S_id(3 eps) but far
        // outside U_id(12 eps), so the fixed-multiple nesting cannot hold for
        // arbitrary pairs. The sharp second inclusion is
        // S_g(e) ⊆ U_g(2e + sqrt(2e)), which this pair does satisfy.
        let id = mat_identity();
        let eps = 0.01;
        let alpha: f64 = 0.24;
        let z = BallPoint::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let w = BallPoint::new(
            Complex64::new(alpha.cos(), 0.0),
            Complex64::new(alpha.sin(), 0.0),
        )
        .unwrap();
        assert!(in_s(&id, 3.0 * eps, &z, &w));
        assert!(!in_u(&id, 12.0 * eps, &z, &w));
        let e = 3.0 * eps;
        assert!(in_u(&id, 2.0 * e + (2.0 * e).sqrt(), &z, &w));

        // the sharp form holds for arbitrary sampled pairs
        let group = family_g(2, 1).unwrap();
        for (gi, elem) in group.elements.iter().enumerate() {
            for i in 0..500u64 {
                let mut rng = stream(11, tag(&format!("sharp:{gi}")), i);
                let (z, w) = radial_pair(&elem.mat, 0.3, 0.3, &mut rng);
                for e in [0.01, 0.05, 0.2] {
                    if in_s(&elem.mat, e, &z, &w) {
                        assert!(in_u(&elem.mat, 2.0 * e + (2.0 * e).sqrt() + 1e-12, &z, &w));
                    }
                }
            }
        }
    }

    #[test]
    fn witness_pairs_are_members() {
        let group = family_g(2, 1).unwrap();
        for &r in &group.reflections {
            for l in 0..group.order() {
                for eps in [0.1, 0.01, 2.0] {
                    let (z, w) = witness_pair(&group, l, r, eps).unwrap();
                    let lr = group.product_index(l, r);
                    assert!(in_u(&group.elements[lr].mat, eps, &z, &w));
                    assert!(in_u(&group.elements[l].mat, eps, &z, &w));
                }
            }
        }
        // closed-form coordinates: l = id, r = diag(-1,1) fixes {z1 = 0},
        // so at eps = 0.1 the witness sits at (0, 1 - eps/4) up to phase
        let r = group
            .reflections
            .iter()
            .copied()
            .find(|&i| {
                let m = group.elements[i].mat;
                (m[0][0] + Complex64::new(1.0, 0.0)).norm() < 1e-12
                    && (m[1][1] - Complex64::new(1.0, 0.0)).norm() < 1e-12
            })
            .expect("diag(-1,1) present");
        let (z, _) = witness_pair(&group, group.identity_index(), r, 0.1).unwrap();
        assert!(z.z1().norm() < 1e-12);
        assert!((z.z2().norm() - 0.975).abs() < 1e-12);
    }

    #[test]
    fn higher_order_powers_share_the_witness() {
        let group = order_three_cyclic();
        let r = group.reflections[0];
        let (z, _) = witness_pair(&group, group.identity_index(), r, 0.05).unwrap();
        // (z, r^j.z) belongs to every U_{r^l}(eps) simultaneously
        for j in 0..group.order() {
            let w = z.transform(&group.elements[j].mat);
            for l in 0..group.order() {
                assert!(in_u(&group.elements[l].mat, 0.05, &z, &w));
            }
        }
    }

    #[test]
    fn witness_requires_a_reflection() {
        let group = family_g(2, 2).unwrap();
        let minus_id = group
            .index_of(&[[Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)], [
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ]])
            .unwrap();
        assert!(matches!(
            witness_pair(&group, 0, minus_id, 0.1),
            Err(Error::NotReflection { .. })
        ));
    }

    #[test]
    fn disjointness_rejects_bad_quotients() {
        let group = family_g(2, 2).unwrap();
        assert!(matches!(
            disjointness_search(&group, 1, 1, &DEFAULT_EPS_GRID, 10, 3),
            Err(Error::IsIdentity)
        ));
        let r = group.reflections[0];
        assert!(matches!(
            disjointness_search(&group, r, group.identity_index(), &DEFAULT_EPS_GRID, 10, 3),
            Err(Error::IsReflection)
        ));
    }

    #[test]
    fn central_element_separates_from_identity() {
        let group = family_g(2, 2).unwrap();
        let minus_id = group
            .index_of(&[[Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)], [
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ]])
            .unwrap();
        let report = disjointness_search(
            &group,
            minus_id,
            group.identity_index(),
            &DEFAULT_EPS_GRID,
            5_000,
            13,
        )
        .unwrap();
        // -I moves every sphere point by a full diameter; no common points
        assert_eq!(report.largest_empty, Some(0.2));
        assert!(report.grid.iter().all(|c| c.hits == 0));
    }

    #[test]
    fn triple_audit_sees_order_structure() {
        let report = triple_intersection_audit(&family_g(2, 1).unwrap(), 0.05, 6_000, 17);
        assert!(report.all_order_two);
        assert!(report.qualifying_pairs.is_empty());
        assert_eq!(report.triple_hits, 0);

        let report = triple_intersection_audit(&order_three_cyclic(), 0.05, 2_000, 17);
        assert!(!report.all_order_two);
        assert_eq!(report.qualifying_pairs.len(), 1);
        assert!(report.qualifying_pairs[0].verified);

        // trivial group: no reflections, vacuous pass
        let report = triple_intersection_audit(&crate::groups::trivial_group(), 0.05, 100, 17);
        assert_eq!(report.scanned_pairs, 0);
        assert_eq!(report.triple_hits, 0);
    }

    #[test]
    fn slab_holds_with_the_per_reflection_constant() {
        for (group, eps) in [
            (family_g(2, 1).unwrap(), 0.05),
            (order_three_cyclic(), 0.02),
        ] {
            for &r in &group.reflections {
                let report = slab_audit(&group, r, eps, 6_000, 23).unwrap();
                assert!(report.members > 0, "sampler missed the region entirely");
                assert_eq!(report.violations, 0);
                assert!(report.max_z_ratio <= 1.0 && report.max_w_ratio <= 1.0);
            }
        }
        // the hyperplane witness sits squarely inside the slab
        let group = family_g(2, 1).unwrap();
        let r = group.reflections[0];
        let (z, w) = witness_pair(&group, group.identity_index(), r, 0.05).unwrap();
        let root = is_reflection(&group.elements[r].mat).unwrap().root;
        assert!(pairing(z.coords(), &root).norm() < 1e-12);
        assert!(in_u(&group.elements[r].mat, 0.05, &z, &w));
    }

    #[test]
    fn membership_symmetry_and_transport() {
        let group = family_g(2, 1).unwrap();
        let r = group.reflections[0];
        let r_inv = group.inverse_index(r);
        let id = group.identity_index();
        for i in 0..2_000u64 {
            let mut rng = stream(29, tag("sym"), i);
            let (z, w) = radial_pair(&group.elements[r].mat, 0.1, 0.1, &mut rng);
            let eps = 0.1;
            let forward = in_u(&group.elements[r].mat, eps, &z, &w)
                && in_u(&group.elements[id].mat, eps, &z, &w);
            let backward = in_u(&group.elements[r_inv].mat, eps, &w, &z)
                && in_u(&group.elements[id].mat, eps, &w, &z);
            assert_eq!(forward, backward);
        }
        // transport: (z, w) in U_g ∩ U_h iff (h.z, w) in U_{g h^{-1}} ∩ U_id
        for g in 0..group.order() {
            for h in 0..group.order() {
                let q = group.product_index(g, group.inverse_index(h));
                for i in 0..500u64 {
                    let mut rng = stream(31, tag(&format!("tr:{g}:{h}")), i);
                    let (z, w) = radial_pair(&group.elements[g].mat, 0.2, 0.2, &mut rng);
                    let eps = 0.07;
                    let direct = in_u(&group.elements[g].mat, eps, &z, &w)
                        && in_u(&group.elements[h].mat, eps, &z, &w);
                    let (tz, tw) = transport(&group, h, &z, &w);
                    let moved = in_u(&group.elements[q].mat, eps, &tz, &tw)
                        && in_u(&crate::groups::mat_identity(), eps, &tz, &tw);
                    assert_eq!(direct, moved);
                }
            }
        }
    }

    #[test]
    fn intersection_candidates_actually_hit() {
        let group = family_g(2, 1).unwrap();
        let r = group.reflections[0];
        let id = group.identity_index();
        let mut hits = 0;
        for i in 0..2_000u64 {
            let mut rng = stream(37, tag("cand"), i);
            let (z, w) = intersection_candidate(&group, r, id, 0.05, &mut rng).unwrap();
            if in_u(&group.elements[r].mat, 0.05, &z, &w)
                && in_u(&group.elements[id].mat, 0.05, &z, &w)
            {
                hits += 1;
            }
        }
        assert!(hits > 100, "only {hits} of 2000 candidates landed");
    }
}
