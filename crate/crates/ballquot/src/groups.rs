//! Finite unitary reflection groups acting on `C^2`.
//!
//! A group is stored as an explicit element list (identity first, breadth
//! first from the generators, so construction order is deterministic).
//! Elements carry their numeric matrix, determinant and order; groups built
//! from the `G(m, l, 2)` family or an axis-rooted cyclic generator also carry
//! exact entries in a cyclotomic field, which the symbolic layer requires.
//!
//! A *reflection* here is a non-identity element fixing a complex line
//! pointwise; its other eigenvalue is a root of unity `e^{i*theta}` with
//! `theta` in `(0, 2*pi)`, and the *root* is a normal vector to the fixed
//! hyperplane.

use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::symbolic::cyclo::CycloNum;

pub type Mat2 = [[Complex64; 2]; 2];
pub type Vec2 = [Complex64; 2];

/// Tolerance for identifying two numerically-constructed group elements.
pub const MATCH_TOL: f64 = 1e-10;
/// Tolerance on `A* A = I` when accepting input matrices.
pub const UNITARY_TOL: f64 = 1e-12;
/// Closure abandons and reports a non-finite group beyond this many elements.
pub const CLOSURE_CAP: usize = 10_000;

// ---------------------------------------------------------------------------
// numeric 2x2 helpers
// ---------------------------------------------------------------------------

pub fn mat_identity() -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn mat_det(a: &Mat2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat_apply(a: &Mat2, v: &Vec2) -> Vec2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Max entrywise modulus of the difference.
pub fn mat_dist(a: &Mat2, b: &Mat2) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

fn unitary_deviation(a: &Mat2) -> f64 {
    mat_dist(&mat_mul(&mat_adjoint(a), a), &mat_identity())
}

// ---------------------------------------------------------------------------
// exact 2x2 matrices over a cyclotomic field
// ---------------------------------------------------------------------------

/// A matrix with entries in `Q(zeta_N)`; all four entries share one conductor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMat {
    pub m: [[CycloNum; 2]; 2],
}

impl ExactMat {
    pub fn conductor(&self) -> u32 {
        self.m[0][0].conductor()
    }

    pub fn identity(n: u32) -> ExactMat {
        ExactMat {
            m: [
                [CycloNum::one(n), CycloNum::zero(n)],
                [CycloNum::zero(n), CycloNum::one(n)],
            ],
        }
    }

    pub fn mul(&self, rhs: &ExactMat) -> ExactMat {
        let mut out = ExactMat::identity(self.conductor());
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][0]
                    .mul(&rhs.m[0][j])
                    .add(&self.m[i][1].mul(&rhs.m[1][j]));
            }
        }
        out
    }

    /// Conjugate transpose; equals the inverse for unitary matrices.
    pub fn adjoint(&self) -> ExactMat {
        ExactMat {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    pub fn det(&self) -> CycloNum {
        self.m[0][0].mul(&self.m[1][1]).sub(&self.m[0][1].mul(&self.m[1][0]))
    }

    pub fn trace(&self) -> CycloNum {
        self.m[0][0].add(&self.m[1][1])
    }

    pub fn embed(&self) -> Mat2 {
        let mut out = mat_identity();
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.m[i][j].embed();
            }
        }
        out
    }

    pub fn embed_into(&self, n: u32) -> Result<ExactMat> {
        let e = |i: usize, j: usize| self.m[i][j].embed_into(n);
        Ok(ExactMat { m: [[e(0, 0)?, e(0, 1)?], [e(1, 0)?, e(1, 1)?]] })
    }

    /// Stable ordering key used to deduplicate elements during exact closure.
    fn key(&self) -> Vec<num_rational::BigRational> {
        let mut k = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                k.extend_from_slice(self.m[i][j].order_key());
            }
        }
        k
    }
}

// ---------------------------------------------------------------------------
// group elements
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GroupElement {
    pub mat: Mat2,
    pub det: Complex64,
    pub order: u32,
    pub exact: Option<ExactMat>,
}

impl GroupElement {
    /// Wraps a numeric unitary matrix, computing its determinant and order.
    pub fn new(mat: Mat2) -> Result<GroupElement> {
        let dev = unitary_deviation(&mat);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        let order = element_order(&mat)?;
        Ok(GroupElement { mat, det: mat_det(&mat), order, exact: None })
    }

    fn from_exact(e: ExactMat) -> Result<GroupElement> {
        let mat = e.embed();
        let order = element_order(&mat)?;
        Ok(GroupElement { mat, det: mat_det(&mat), order, exact: Some(e) })
    }

    pub fn is_identity(&self) -> bool {
        mat_dist(&self.mat, &mat_identity()) <= MATCH_TOL
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        mat_apply(&self.mat, v)
    }
}

/// Multiplicative order of a unitary matrix, or `NotFinite` past the cap.
fn element_order(mat: &Mat2) -> Result<u32> {
    let id = mat_identity();
    let mut p = *mat;
    for k in 1..=CLOSURE_CAP as u32 {
        if mat_dist(&p, &id) <= MATCH_TOL {
            return Ok(k);
        }
        p = mat_mul(&p, mat);
    }
    Err(Error::NotFinite { cap: CLOSURE_CAP })
}

// ---------------------------------------------------------------------------
// reflections and hyperplanes
// ---------------------------------------------------------------------------

/// Numeric data of a reflection: unit root (normal to the fixed hyperplane,
/// phase-canonicalized) and the rotation angle of the non-unit eigenvalue.
pub struct ReflectionData {
    pub root: Vec2,
    pub angle: f64,
}

/// Tests whether `mat` is a reflection: a non-identity unitary with
/// eigenvalue 1. Returns its root and the angle `theta` in `(0, 2*pi)` of
/// the other eigenvalue.
pub fn is_reflection(mat: &Mat2) -> Option<ReflectionData> {
    if mat_dist(mat, &mat_identity()) <= MATCH_TOL {
        return None;
    }
    let tr = mat[0][0] + mat[1][1];
    let det = mat_det(mat);
    // char(1) = 1 - tr + det vanishes iff 1 is an eigenvalue
    if (Complex64::new(1.0, 0.0) - tr + det).norm() > MATCH_TOL {
        return None;
    }
    let lambda = tr - Complex64::new(1.0, 0.0); // the non-unit eigenvalue
    if (lambda - Complex64::new(1.0, 0.0)).norm() <= MATCH_TOL {
        return None;
    }
    // root = eigenvector of lambda, read off the rows of (M - lambda I)
    let c1 = [mat[0][1], lambda - mat[0][0]];
    let c2 = [lambda - mat[1][1], mat[1][0]];
    let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
    let n2 = c2[0].norm_sqr() + c2[1].norm_sqr();
    let raw = if n1 >= n2 { c1 } else { c2 };
    let root = canonical_unit(&raw);
    let mut angle = lambda.arg();
    if angle < 0.0 {
        angle += 2.0 * std::f64::consts::PI;
    }
    Some(ReflectionData { root, angle })
}

/// Normalizes to unit length and rotates so the largest-modulus component is
/// real positive; makes roots comparable across construction paths.
pub fn canonical_unit(v: &Vec2) -> Vec2 {
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    assert!(norm > 0.0, "zero vector has no direction");
    let lead = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let phase = lead / lead.norm();
    [v[0] / (norm * phase), v[1] / (norm * phase)]
}

/// Exact root of an exact reflection (eigenvector of the non-unit
/// eigenvalue), or `None` if the matrix is not a reflection. Scaled so that
/// the first nonzero coordinate is 1 — unit normalization would need square
/// roots outside the field, so this is the canonical representative instead.
pub fn exact_reflection_root(e: &ExactMat) -> Option<[CycloNum; 2]> {
    let n = e.conductor();
    let one = CycloNum::one(n);
    let tr = e.trace();
    let det = e.det();
    if !one.sub(&tr).add(&det).is_zero() {
        return None;
    }
    let lambda = tr.sub(&one);
    if lambda.sub(&one).is_zero() || ExactMat::identity(n) == *e {
        return None;
    }
    let c1 = [e.m[0][1].clone(), lambda.sub(&e.m[0][0])];
    if !(c1[0].is_zero() && c1[1].is_zero()) {
        return Some(scale_first_nonzero_to_one(c1));
    }
    let c2 = [lambda.sub(&e.m[1][1]), e.m[1][0].clone()];
    if !(c2[0].is_zero() && c2[1].is_zero()) {
        return Some(scale_first_nonzero_to_one(c2));
    }
    None
}

fn scale_first_nonzero_to_one(v: [CycloNum; 2]) -> [CycloNum; 2] {
    let lead = if v[0].is_zero() { &v[1] } else { &v[0] };
    let inv = lead.inverse().expect("nonzero field element");
    [v[0].mul(&inv), v[1].mul(&inv)]
}

/// A reflecting hyperplane `Y = root^perp` together with its pointwise
/// stabilizer data. `multiplicity` is the stabilizer order `m_Y`, so the
/// hyperplane carries `m_Y - 1` reflections.
#[derive(Clone)]
pub struct HyperplaneData {
    pub root: Vec2,
    pub multiplicity: usize,
    /// Indices (into the group's element list) of the reflections fixing `Y`.
    pub members: Vec<usize>,
    /// Rotation angles of those reflections, each in `(0, 2*pi)`.
    pub angles: Vec<f64>,
    pub exact_root: Option<[CycloNum; 2]>,
}

// ---------------------------------------------------------------------------
// the group type
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct ReflectionGroup {
    pub name: String,
    pub elements: Vec<GroupElement>,
    /// Indices into `elements` of the generators the group was built from.
    pub generators: Vec<usize>,
    /// lcm of the element orders.
    pub exponent: u32,
    /// Indices of the reflections, in element order.
    pub reflections: Vec<usize>,
    pub hyperplanes: Vec<HyperplaneData>,
    /// Whether the reflections alone generate the whole group.
    pub reflection_generated: bool,
}

impl ReflectionGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    /// Index of the element matching `mat` within [`MATCH_TOL`], if any.
    pub fn index_of(&self, mat: &Mat2) -> Option<usize> {
        self.elements.iter().position(|e| mat_dist(&e.mat, mat) <= MATCH_TOL)
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        let inv = mat_adjoint(&self.elements[i].mat);
        self.index_of(&inv).expect("group closed under inverses")
    }

    pub fn product_index(&self, i: usize, j: usize) -> usize {
        let p = mat_mul(&self.elements[i].mat, &self.elements[j].mat);
        self.index_of(&p).expect("group closed under products")
    }

    /// True when every element carries exact cyclotomic entries.
    pub fn is_exact(&self) -> bool {
        self.elements.iter().all(|e| e.exact.is_some())
    }

    /// Conductor of the exact entries, when the group is exact.
    pub fn exact_conductor(&self) -> Option<u32> {
        if self.is_exact() {
            self.elements.first().and_then(|e| e.exact.as_ref()).map(ExactMat::conductor)
        } else {
            None
        }
    }
}

// ---------------------------------------------------------------------------
// constructors
// ---------------------------------------------------------------------------

/// Closes a numeric generating set under multiplication (breadth-first, so
/// element order is deterministic; the identity always sits at index 0).
pub fn close_generators(gens: &[Mat2]) -> Result<ReflectionGroup> {
    let gens: Vec<GroupElement> =
        gens.iter().map(|m| GroupElement::new(*m)).collect::<Result<_>>()?;
    let mut elements = vec![GroupElement::new(mat_identity())?];
    let mut gen_indices = Vec::new();
    let mut frontier = 0usize;
    // seed: record generators (deduplicated) right after the identity
    for g in &gens {
        if let Some(i) = elements.iter().position(|e| mat_dist(&e.mat, &g.mat) <= MATCH_TOL) {
            gen_indices.push(i);
        } else {
            elements.push(g.clone());
            gen_indices.push(elements.len() - 1);
        }
    }
    while frontier < elements.len() {
        let base = elements[frontier].mat;
        for g in &gens {
            let p = mat_mul(&base, &g.mat);
            if !elements.iter().any(|e| mat_dist(&e.mat, &p) <= MATCH_TOL) {
                if elements.len() >= CLOSURE_CAP {
                    return Err(Error::NotFinite { cap: CLOSURE_CAP });
                }
                elements.push(GroupElement::new(p)?);
            }
        }
        frontier += 1;
    }
    let name = format!("closure[{} gens, order {}]", gens.len(), elements.len());
    finalize(elements, gen_indices, name)
}

/// Exact-arithmetic variant of [`close_generators`] for matrices whose
/// entries already live in a cyclotomic field.
pub fn close_generators_exact(gens: Vec<ExactMat>) -> Result<ReflectionGroup> {
    let n_gens = gens.len();
    let mut group = close_exact(gens, String::new())?;
    group.name = format!("closure[{} gens, order {}]", n_gens, group.order());
    Ok(group)
}

/// Exact breadth-first closure; mirrors [`close_generators`].
fn close_exact(gens: Vec<ExactMat>, name: String) -> Result<ReflectionGroup> {
    use std::collections::BTreeMap;
    let n = gens.first().map(|g| g.conductor()).unwrap_or(1);
    let mut elements = vec![ExactMat::identity(n)];
    let mut seen: BTreeMap<_, usize> = BTreeMap::new();
    seen.insert(elements[0].key(), 0);
    let mut gen_indices = Vec::new();
    for g in &gens {
        let k = g.key();
        if let Some(&i) = seen.get(&k) {
            gen_indices.push(i);
        } else {
            elements.push(g.clone());
            seen.insert(k, elements.len() - 1);
            gen_indices.push(elements.len() - 1);
        }
    }
    let mut frontier = 0usize;
    while frontier < elements.len() {
        for g in &gens {
            let p = elements[frontier].mul(g);
            let k = p.key();
            if !seen.contains_key(&k) {
                if elements.len() >= CLOSURE_CAP {
                    return Err(Error::NotFinite { cap: CLOSURE_CAP });
                }
                elements.push(p);
                seen.insert(k, elements.len() - 1);
            }
        }
        frontier += 1;
    }
    let elements = elements.into_iter().map(GroupElement::from_exact).collect::<Result<_>>()?;
    finalize(elements, gen_indices, name)
}

/// The imprimitive family `G(m, l, 2)` (`l` divides `m`): monomial matrices
/// `z -> (theta^{v1} z_{tau(1)}, theta^{v2} z_{tau(2)})` with `theta` a
/// primitive `m`-th root of unity, `v1 + v2 = 0 (mod l)` and `tau` in `S_2`.
/// Order `2 m^2 / l`. Entries are exact over `Q(zeta_m)`, re-embedded at the
/// group exponent.
pub fn family_g(m: u32, l: u32) -> Result<ReflectionGroup> {
    if m == 0 || l == 0 || m % l != 0 {
        return Err(Error::BadDivisor(format!(
            "G(m, l, 2) requires l | m and m, l >= 1; got m = {}, l = {}",
            m, l
        )));
    }
    let n = m;
    let zero = CycloNum::zero(n);
    let one = CycloNum::one(n);
    let swap = ExactMat { m: [[zero.clone(), one.clone()], [one.clone(), zero.clone()]] };
    let mut gens = vec![swap];
    if l < m {
        gens.push(ExactMat {
            m: [
                [CycloNum::root_of_unity(n, l as i64), zero.clone()],
                [zero.clone(), one.clone()],
            ],
        });
    }
    if m > 1 {
        gens.push(ExactMat {
            m: [
                [CycloNum::root_of_unity(n, 1), zero.clone()],
                [zero.clone(), CycloNum::root_of_unity(n, -1)],
            ],
        });
    }
    let group = close_exact(gens, format!("G({},{},2)", m, l))?;
    let expected = (2 * m * m / l) as usize;
    assert_eq!(group.order(), expected, "G({},{},2) closure has wrong order", m, l);
    Ok(group)
}

/// The cyclic group of order `m` generated by a reflection with the given
/// root. Axis roots (proportional to a coordinate axis) yield exact entries;
/// general roots yield a numeric group. `m = 1` gives the trivial group.
pub fn cyclic(m: u32, root: Vec2) -> Result<ReflectionGroup> {
    if m == 0 {
        return Err(Error::BadDivisor("cyclic group order must be >= 1".into()));
    }
    let name = format!("cyclic({})", m);
    if m == 1 {
        return close_exact(Vec::new(), name).map(|mut g| {
            g.name = "trivial".into();
            g
        });
    }
    let norm = (root[0].norm_sqr() + root[1].norm_sqr()).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroForm);
    }
    // exact path for axis roots
    let zero = CycloNum::zero(m);
    let one = CycloNum::one(m);
    let zeta = CycloNum::root_of_unity(m, 1);
    if root[1].norm() <= 1e-14 * norm {
        let gen = ExactMat { m: [[zeta, zero.clone()], [zero, one]] };
        return close_exact(vec![gen], name);
    }
    if root[0].norm() <= 1e-14 * norm {
        let gen = ExactMat { m: [[one, zero.clone()], [zero, zeta]] };
        return close_exact(vec![gen], name);
    }
    // numeric path: r = I + (zeta - 1) * rho rho^*
    let rho = [root[0] / norm, root[1] / norm];
    let zeta_num = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / m as f64);
    let w = zeta_num - Complex64::new(1.0, 0.0);
    let mut gen = mat_identity();
    for i in 0..2 {
        for j in 0..2 {
            gen[i][j] += w * rho[i] * rho[j].conj();
        }
    }
    let mut group = close_generators(&[gen])?;
    group.name = name;
    Ok(group)
}

/// The one-element group; quotient statements degenerate to the plain ball.
pub fn trivial_group() -> ReflectionGroup {
    cyclic(1, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
        .expect("closing the empty generating set cannot fail")
}

/// Conjugates every element by a unitary `u`, preserving exact entries when
/// `u_exact` is supplied (its conductor must be compatible with the group's).
pub fn conjugate_group(
    group: &ReflectionGroup,
    u: &Mat2,
    u_exact: Option<&ExactMat>,
) -> Result<ReflectionGroup> {
    let dev = unitary_deviation(u);
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let u_adj = mat_adjoint(u);
    let name = format!("{} ^u", group.name);
    match (group.exact_conductor(), u_exact) {
        (Some(ng), Some(ue)) => {
            let n = ng.lcm(&ue.conductor());
            let ue = ue.embed_into(n)?;
            let ue_adj = ue.adjoint();
            let elements = group
                .elements
                .iter()
                .map(|e| {
                    let ex = e.exact.as_ref().expect("exact group").embed_into(n)?;
                    GroupElement::from_exact(ue.mul(&ex).mul(&ue_adj))
                })
                .collect::<Result<_>>()?;
            finalize(elements, group.generators.clone(), name)
        }
        _ => {
            let elements = group
                .elements
                .iter()
                .map(|e| GroupElement::new(mat_mul(&mat_mul(u, &e.mat), &u_adj)))
                .collect::<Result<_>>()?;
            finalize(elements, group.generators.clone(), name)
        }
    }
}

/// Left-coset representatives of `H` in `G` (indices into `G.elements`,
/// identity coset first, then in element order). Errors with `NotSubgroup`
/// if `H` is not contained in `G` or `|H|` does not divide `|G|`.
pub fn coset_representatives(g: &ReflectionGroup, h: &ReflectionGroup) -> Result<Vec<usize>> {
    for e in &h.elements {
        if g.index_of(&e.mat).is_none() {
            return Err(Error::NotSubgroup);
        }
    }
    let mut reps: Vec<usize> = Vec::new();
    let mut covered = vec![false; g.order()];
    for i in 0..g.order() {
        if covered[i] {
            continue;
        }
        reps.push(i);
        for e in &h.elements {
            let p = mat_mul(&g.elements[i].mat, &e.mat);
            match g.index_of(&p) {
                Some(j) => covered[j] = true,
                None => return Err(Error::NotSubgroup),
            }
        }
    }
    if reps.len() * h.order() != g.order() {
        return Err(Error::NotSubgroup);
    }
    Ok(reps)
}

// ---------------------------------------------------------------------------
// finalize: orders, exponent, reflections, hyperplanes
// ---------------------------------------------------------------------------

fn finalize(
    mut elements: Vec<GroupElement>,
    generators: Vec<usize>,
    name: String,
) -> Result<ReflectionGroup> {
    let exponent = elements.iter().fold(1u32, |acc, e| acc.lcm(&e.order));

    // keep exact entries at the conductor the symbolic layer wants (the
    // exponent), when that is possible; otherwise leave them untouched
    if elements.iter().all(|e| e.exact.is_some()) {
        let n0 = elements[0].exact.as_ref().unwrap().conductor();
        if n0 != exponent && exponent % n0 == 0 {
            for e in &mut elements {
                let ex = e.exact.take().unwrap().embed_into(exponent)?;
                e.exact = Some(ex);
            }
        }
    }

    let mut reflections = Vec::new();
    let mut refl_data: Vec<ReflectionData> = Vec::new();
    for (i, e) in elements.iter().enumerate() {
        if let Some(data) = is_reflection(&e.mat) {
            reflections.push(i);
            refl_data.push(data);
        }
    }

    // bucket reflections by hyperplane: unit roots parallel up to phase
    let mut hyperplanes: Vec<HyperplaneData> = Vec::new();
    for (slot, &idx) in reflections.iter().enumerate() {
        let data = &refl_data[slot];
        let found = hyperplanes.iter_mut().find(|h| {
            (h.root[0] * data.root[1] - h.root[1] * data.root[0]).norm() <= MATCH_TOL
        });
        match found {
            Some(h) => {
                h.members.push(idx);
                h.angles.push(data.angle);
            }
            None => hyperplanes.push(HyperplaneData {
                root: data.root,
                multiplicity: 0, // filled below
                members: vec![idx],
                angles: vec![data.angle],
                exact_root: None,
            }),
        }
    }
    for h in &mut hyperplanes {
        h.multiplicity = h.members.len() + 1; // stabilizer = reflections + id
        h.exact_root = h
            .members
            .iter()
            .find_map(|&i| elements[i].exact.as_ref().and_then(exact_reflection_root));
    }

    let reflection_generated = if reflections.is_empty() {
        elements.len() == 1
    } else {
        subgroup_size(&elements, &reflections) == elements.len()
    };

    Ok(ReflectionGroup {
        name,
        elements,
        generators,
        exponent,
        reflections,
        hyperplanes,
        reflection_generated,
    })
}

/// Size of the subgroup generated by the given element indices, computed by
/// closure inside the ambient element list.
fn subgroup_size(elements: &[GroupElement], gens: &[usize]) -> usize {
    let mut in_sub = vec![false; elements.len()];
    let id = elements
        .iter()
        .position(|e| e.is_identity())
        .expect("group contains the identity");
    in_sub[id] = true;
    let mut frontier = vec![id];
    while let Some(i) = frontier.pop() {
        for &g in gens {
            let p = mat_mul(&elements[i].mat, &elements[g].mat);
            let j = elements
                .iter()
                .position(|e| mat_dist(&e.mat, &p) <= MATCH_TOL)
                .expect("group closed under products");
            if !in_sub[j] {
                in_sub[j] = true;
                frontier.push(j);
            }
        }
    }
    in_sub.iter().filter(|&&b| b).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn family_orders_match_the_formula() {
        for (m, l) in [(1, 1), (2, 1), (2, 2), (3, 3), (4, 2), (6, 2), (6, 6)] {
            let g = family_g(m, l).unwrap();
            assert_eq!(g.order(), (2 * m * m / l) as usize, "G({},{},2)", m, l);
            assert!(g.elements[0].is_identity());
            assert!(g.is_exact());
            assert!(g.reflection_generated, "G({},{},2) must be reflection-generated", m, l);
        }
        assert!(family_g(4, 3).is_err());
        assert!(family_g(0, 1).is_err());
    }

    #[test]
    fn dihedral_g212_structure() {
        let g = family_g(2, 1).unwrap();
        assert_eq!(g.order(), 8);
        assert_eq!(g.exponent, 4);
        assert_eq!(g.reflections.len(), 4);
        assert_eq!(g.hyperplanes.len(), 4);
        // roots: the two axes and the two diagonals
        let mut seen = vec![false; 4];
        let expected: [Vec2; 4] = [
            [z(1.0, 0.0), z(0.0, 0.0)],
            [z(0.0, 0.0), z(1.0, 0.0)],
            [z(1.0 / 2f64.sqrt(), 0.0), z(1.0 / 2f64.sqrt(), 0.0)],
            [z(1.0 / 2f64.sqrt(), 0.0), z(-1.0 / 2f64.sqrt(), 0.0)],
        ];
        for h in &g.hyperplanes {
            assert_eq!(h.multiplicity, 2);
            for (k, r) in expected.iter().enumerate() {
                if (h.root[0] * r[1] - h.root[1] * r[0]).norm() < 1e-12 {
                    seen[k] = true;
                }
            }
            assert!(h.exact_root.is_some());
        }
        assert!(seen.iter().all(|&b| b), "unexpected root set");
    }

    #[test]
    fn g222_contains_minus_identity_but_only_two_reflections() {
        let g = family_g(2, 2).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(g.exponent, 2);
        assert_eq!(g.reflections.len(), 2);
        let minus_id = [[z(-1.0, 0.0), z(0.0, 0.0)], [z(0.0, 0.0), z(-1.0, 0.0)]];
        let idx = g.index_of(&minus_id).expect("-I in G(2,2,2)");
        assert!(is_reflection(&g.elements[idx].mat).is_none());
    }

    #[test]
    fn order_three_cyclic_group_about_the_first_axis() {
        let g = cyclic(3, [z(1.0, 0.0), z(0.0, 0.0)]).unwrap();
        assert_eq!(g.order(), 3);
        assert_eq!(g.exponent, 3);
        assert_eq!(g.reflections.len(), 2);
        assert_eq!(g.hyperplanes.len(), 1);
        let h = &g.hyperplanes[0];
        assert_eq!(h.multiplicity, 3);
        let mut angles = h.angles.clone();
        angles.sort_by(f64::total_cmp);
        let pi = std::f64::consts::PI;
        assert!((angles[0] - 2.0 * pi / 3.0).abs() < 1e-12);
        assert!((angles[1] - 4.0 * pi / 3.0).abs() < 1e-12);
        assert!(g.is_exact());
    }

    #[test]
    fn cyclic_with_tilted_root_is_numeric_but_isomorphic() {
        let s = 1.0 / 2f64.sqrt();
        let g = cyclic(4, [z(s, 0.0), z(s, 0.0)]).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(g.hyperplanes.len(), 1);
        assert_eq!(g.hyperplanes[0].multiplicity, 4);
        // root comes back parallel to (1,1)/sqrt(2)
        let r = g.hyperplanes[0].root;
        assert!((r[0] - r[1]).norm() < 1e-10);
    }

    #[test]
    fn infinite_order_rotation_is_rejected() {
        let g = [[Complex64::from_polar(1.0, 1.0), z(0.0, 0.0)], [z(0.0, 0.0), z(1.0, 0.0)]];
        assert!(matches!(close_generators(&[g]), Err(Error::NotFinite { .. })));
    }

    #[test]
    fn non_unitary_input_is_rejected() {
        let g = [[z(2.0, 0.0), z(0.0, 0.0)], [z(0.0, 0.0), z(1.0, 0.0)]];
        assert!(matches!(close_generators(&[g]), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn coset_representatives_of_an_axis_subgroup() {
        let g = family_g(2, 1).unwrap();
        let h = cyclic(2, [z(1.0, 0.0), z(0.0, 0.0)]).unwrap();
        let reps = coset_representatives(&g, &h).unwrap();
        assert_eq!(reps.len(), 4);
        assert_eq!(reps[0], 0, "identity coset must come first");
        // reps x H covers G exactly once
        let mut hit = vec![0usize; g.order()];
        for &r in &reps {
            for e in &h.elements {
                let p = mat_mul(&g.elements[r].mat, &e.mat);
                hit[g.index_of(&p).unwrap()] += 1;
            }
        }
        assert!(hit.iter().all(|&c| c == 1));
        // a non-subgroup is refused
        let k = cyclic(3, [z(1.0, 0.0), z(0.0, 0.0)]).unwrap();
        assert!(matches!(coset_representatives(&g, &k), Err(Error::NotSubgroup)));
    }

    #[test]
    fn conjugation_transports_roots() {
        let g = cyclic(2, [z(1.0, 0.0), z(0.0, 0.0)]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let u = [[z(s, 0.0), z(-s, 0.0)], [z(s, 0.0), z(s, 0.0)]];
        let gu = conjugate_group(&g, &u, None).unwrap();
        assert_eq!(gu.order(), 2);
        let r = gu.hyperplanes[0].root;
        // u e_1 = (s, s)
        assert!((r[0] - r[1]).norm() < 1e-10, "root should move to the diagonal");
    }

    #[test]
    fn closure_of_non_reflection_generator_is_flagged() {
        let minus_id = [[z(-1.0, 0.0), z(0.0, 0.0)], [z(0.0, 0.0), z(-1.0, 0.0)]];
        let g = close_generators(&[minus_id]).unwrap();
        assert_eq!(g.order(), 2);
        assert!(!g.reflection_generated);
        assert!(g.reflections.is_empty());
    }

    #[test]
    fn construction_is_deterministic() {
        let a = family_g(4, 2).unwrap();
        let b = family_g(4, 2).unwrap();
        assert_eq!(a.order(), b.order());
        for (x, y) in a.elements.iter().zip(&b.elements) {
            assert_eq!(mat_dist(&x.mat, &y.mat), 0.0);
        }
    }

    #[test]
    fn exponent_uses_rotations_not_just_reflections() {
        // G(2,1,2) has order-4 rotations (the antidiagonal sign flips), so the
        // exponent exceeds every reflection order.
        let g = family_g(2, 1).unwrap();
        let max_refl_order =
            g.reflections.iter().map(|&i| g.elements[i].order).max().unwrap();
        assert_eq!(max_refl_order, 2);
        assert_eq!(g.exponent, 4);
    }
}
