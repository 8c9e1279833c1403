//! Stratified numerical certification of the kernel estimates.
//!
//! The central quantity is the ratio
//! `R(z, w) = |k_gp(z, w)| / sum_g |K(g.z, w)|`: the domination claim says
//! `R` stays bounded over the bidisk of pairs. Uniform sampling never sees
//! the interesting geometry (everything happens near the boundary diagonal
//! and near the reflection hyperplanes), so the harness stratifies: dyadic
//! boundary shells, neighborhoods of each singular set `{w ~ g.z}`, and
//! hyperplane slabs. Alongside the ratio scan live the cyclic closed-form
//! cross-check, the per-region bounds, a Monte Carlo application of the
//! averaged projection to test functions, the weighted-norm ratio table, and
//! a symmetry battery for the averaged kernel itself.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{is_reflection, ReflectionGroup, Vec2};
use crate::kernels::{
    averaged_kernel, averaged_kernel_dual, ball_kernel, cyclic_closed_form, dominating_sum,
    k_gp, weight_sigma, BallPoint, KernelConfig, BALL_VOLUME,
};
use crate::regions::{hyperplane_direction, in_u, witness_pair};
use crate::sampling::{
    log_uniform, point_at_gap, project_into_ball, stream, tag, uniform_ball, unit_direction,
};

// ---------------------------------------------------------------------------
// the ratio and its sampling strategies
// ---------------------------------------------------------------------------

/// `R(z, w) = |k_gp| / sum_g |K(g.z, w)|`. Scale-free in the orbit-map
/// constant and in kernel normalization (both cancel between numerator and
/// denominator), and invariant under `z -> g.z`.
pub fn bound_ratio(
    group: &ReflectionGroup,
    z: &BallPoint,
    w: &BallPoint,
    cfg: &KernelConfig,
) -> Result<f64> {
    let num = k_gp(group, z, w, cfg)?.norm();
    let den = dominating_sum(group, z, w, cfg)?;
    let r = num / den;
    if !r.is_finite() {
        return Err(Error::SingularPoint { index: 0, value: den });
    }
    Ok(r)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub enum StrategyKind {
    /// Independent uniform pairs; a control stratum.
    Uniform,
    /// Dyadic boundary shells: stratum `k` draws both gaps from
    /// `[2^{-k-1}, 2^{-k}]`, `k = 1..=k_max`.
    Boundary { k_max: u32 },
    /// Pairs hugging the singular set of one term: `w = g.z + delta`.
    NearSingular { g_index: usize },
    /// Pairs hugging a reflection hyperplane near the sphere.
    Slab { r_index: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleStrategy {
    pub kind: StrategyKind,
    pub count: u64,
    pub seed: u64,
}

/// The default stratification: 10% uniform control, 60% dyadic boundary
/// shells (12 strata), 15% split across the singular sets, 15% across the
/// hyperplane slabs. Shares without a target (trivial group, no reflections)
/// roll into the boundary stratum.
pub fn standard_strategies(
    group: &ReflectionGroup,
    total: u64,
    seed: u64,
) -> Vec<SampleStrategy> {
    let total = total.max(40);
    let uniform = total / 10;
    let non_id: Vec<usize> = (1..group.order()).collect();
    let near_share = if non_id.is_empty() { 0 } else { total * 15 / 100 };
    let slab_share = if group.reflections.is_empty() { 0 } else { total * 15 / 100 };
    let boundary = total - uniform - near_share - slab_share;

    let mut out = vec![
        SampleStrategy { kind: StrategyKind::Uniform, count: uniform, seed },
        SampleStrategy { kind: StrategyKind::Boundary { k_max: 12 }, count: boundary, seed },
    ];
    if !non_id.is_empty() {
        let per = (near_share / non_id.len() as u64).max(1);
        for g in non_id {
            out.push(SampleStrategy { kind: StrategyKind::NearSingular { g_index: g }, count: per, seed });
        }
    }
    if !group.reflections.is_empty() {
        let per = (slab_share / group.reflections.len() as u64).max(1);
        for &r in &group.reflections {
            out.push(SampleStrategy { kind: StrategyKind::Slab { r_index: r }, count: per, seed });
        }
    }
    out
}

fn strategy_tag(kind: &StrategyKind) -> u64 {
    match kind {
        StrategyKind::Uniform => tag("strategy:uniform"),
        StrategyKind::Boundary { k_max } => tag(&format!("strategy:boundary:{k_max}")),
        StrategyKind::NearSingular { g_index } => tag(&format!("strategy:near:{g_index}")),
        StrategyKind::Slab { r_index } => tag(&format!("strategy:slab:{r_index}")),
    }
}

/// Stratum label of sample `index` under this strategy.
fn stratum_label(kind: &StrategyKind, index: u64) -> String {
    match kind {
        StrategyKind::Uniform => "uniform".into(),
        StrategyKind::Boundary { k_max } => format!("boundary:{}", 1 + index % *k_max as u64),
        StrategyKind::NearSingular { g_index } => format!("near:{g_index}"),
        StrategyKind::Slab { r_index } => format!("slab:{r_index}"),
    }
}

/// The pair drawn by sample `index` of a strategy; a pure function of
/// `(strategy, index)`, which is what makes reports reproducible and lets
/// the argmax pair be regenerated from its index alone.
pub fn strategy_pair(
    group: &ReflectionGroup,
    strategy: &SampleStrategy,
    index: u64,
) -> (BallPoint, BallPoint) {
    let mut rng = stream(strategy.seed, strategy_tag(&strategy.kind), index);
    match &strategy.kind {
        StrategyKind::Uniform => (uniform_ball(&mut rng), uniform_ball(&mut rng)),
        StrategyKind::Boundary { k_max } => {
            let k = 1 + index % *k_max as u64;
            let lo = 2f64.powi(-(k as i32) - 1);
            use rand::Rng;
            let gap_z = lo * (1.0 + rng.gen::<f64>());
            let gap_w = lo * (1.0 + rng.gen::<f64>());
            (point_at_gap(&mut rng, gap_z), point_at_gap(&mut rng, gap_w))
        }
        StrategyKind::NearSingular { g_index } => {
            let gap = log_uniform(&mut rng, 1e-8, 0.5);
            let z = point_at_gap(&mut rng, gap);
            let gz = z.transform(&group.elements[*g_index].mat);
            let delta = log_uniform(&mut rng, 1e-8, 0.5);
            let dir = unit_direction(&mut rng);
            let w = project_into_ball([gz.z1() + dir[0] * delta, gz.z2() + dir[1] * delta]);
            (z, w)
        }
        StrategyKind::Slab { r_index } => {
            let elem = &group.elements[*r_index];
            let data = is_reflection(&elem.mat).expect("slab strategy needs a reflection");
            let root = data.root;
            let v = hyperplane_direction(&root);
            let xi = log_uniform(&mut rng, 1e-8, 0.3);
            let tangent = (1.0 - xi * xi).sqrt();
            use rand::Rng;
            let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let gap = log_uniform(&mut rng, 1e-8, 0.3);
            let radius = 1.0 - gap;
            let z = project_into_ball([
                (v[0] * tangent + root[0] * xi * phase) * radius,
                (v[1] * tangent + root[1] * xi * phase) * radius,
            ]);
            let anchor = if index % 2 == 0 { z.clone() } else { z.transform(&elem.mat) };
            let delta = log_uniform(&mut rng, 1e-8, 0.3);
            let dir = unit_direction(&mut rng);
            let w = project_into_ball([anchor.z1() + dir[0] * delta, anchor.z2() + dir[1] * delta]);
            (z, w)
        }
    }
}

// ---------------------------------------------------------------------------
// the bound report
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct StratumRow {
    pub stratum: String,
    pub count: u64,
    pub sup_ratio: f64,
    pub argmax_z: Option<[f64; 4]>,
    pub argmax_w: Option<[f64; 4]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub group: String,
    pub p: f64,
    pub samples: u64,
    pub sup_ratio: f64,
    pub argmax_z: Option<[f64; 4]>,
    pub argmax_w: Option<[f64; 4]>,
    /// Whether re-evaluating the argmax pair reproduced `sup_ratio` within
    /// `1e-10` relative.
    pub argmax_reproduced: bool,
    pub per_stratum: Vec<StratumRow>,
    /// Singular or weight-degenerate evaluations skipped (a null set; the
    /// bound is an almost-everywhere statement).
    pub failures: u64,
}

/// Scans `R` over the given strategies and reports the per-stratum and
/// global suprema with their witnesses.
pub fn bound_ratio_report(
    group: &ReflectionGroup,
    cfg: &KernelConfig,
    strategies: &[SampleStrategy],
) -> Result<BoundReport> {
    cfg.validate()?;
    use std::collections::BTreeMap;
    struct Acc {
        count: u64,
        sup: f64,
        arg: Option<(usize, u64)>,
    }
    let mut strata: BTreeMap<String, Acc> = BTreeMap::new();
    let mut failures = 0u64;
    let mut samples = 0u64;

    for (si, strat) in strategies.iter().enumerate() {
        samples += strat.count;
        let evals: Vec<(String, Option<f64>)> = (0..strat.count)
            .into_par_iter()
            .map(|i| {
                let (z, w) = strategy_pair(group, strat, i);
                let label = stratum_label(&strat.kind, i);
                (label, bound_ratio(group, &z, &w, cfg).ok())
            })
            .collect();
        for (i, (label, ratio)) in evals.into_iter().enumerate() {
            let acc = strata.entry(label).or_insert(Acc { count: 0, sup: 0.0, arg: None });
            match ratio {
                Some(r) => {
                    acc.count += 1;
                    if r > acc.sup || acc.arg.is_none() {
                        acc.sup = r;
                        acc.arg = Some((si, i as u64));
                    }
                }
                None => failures += 1,
            }
        }
    }

    let mut per_stratum = Vec::new();
    let mut sup_ratio = 0.0f64;
    let mut argmax: Option<(usize, u64)> = None;
    for (label, acc) in &strata {
        let pair = acc.arg.map(|(si, i)| strategy_pair(group, &strategies[si], i));
        per_stratum.push(StratumRow {
            stratum: label.clone(),
            count: acc.count,
            sup_ratio: acc.sup,
            argmax_z: pair.as_ref().map(|(z, _)| z.to_array()),
            argmax_w: pair.as_ref().map(|(_, w)| w.to_array()),
        });
        if acc.arg.is_some() && (acc.sup > sup_ratio || argmax.is_none()) {
            sup_ratio = acc.sup;
            argmax = acc.arg;
        }
    }

    let (argmax_z, argmax_w, argmax_reproduced) = match argmax {
        Some((si, i)) => {
            let (z, w) = strategy_pair(group, &strategies[si], i);
            let re = bound_ratio(group, &z, &w, cfg)?;
            let ok = (re - sup_ratio).abs() <= 1e-10 * sup_ratio.max(1.0);
            (Some(z.to_array()), Some(w.to_array()), ok)
        }
        None => (None, None, true),
    };

    Ok(BoundReport {
        group: group.name.clone(),
        p: cfg.p,
        samples,
        sup_ratio,
        argmax_z,
        argmax_w,
        argmax_reproduced,
        per_stratum,
        failures,
    })
}

/// Invariance battery for `R`: transport by each group element, rescaling
/// the orbit-map constant, and toggling kernel normalization. Deviations are
/// measured relative to `max(R, R', 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub samples: u64,
    pub max_transport_dev: f64,
    pub max_rescale_dev: f64,
    pub max_normalize_dev: f64,
}

pub fn r_invariance_report(
    group: &ReflectionGroup,
    cfg: &KernelConfig,
    sample_count: u64,
    seed: u64,
) -> Result<InvarianceReport> {
    cfg.validate()?;
    let mut rescaled = *cfg;
    rescaled.jac_constant_modulus *= 3.7;
    let mut toggled = *cfg;
    toggled.normalized = !toggled.normalized;

    let devs: Vec<Option<(f64, f64, f64)>> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, tag("invariance"), i);
            // near-singular pairs exercise the ratio where it is largest
            let g = (i % group.order() as u64) as usize;
            let gap = log_uniform(&mut rng, 1e-6, 0.5);
            let z = point_at_gap(&mut rng, gap);
            let gz = z.transform(&group.elements[g].mat);
            let delta = log_uniform(&mut rng, 1e-6, 0.5);
            let dir = unit_direction(&mut rng);
            let w = project_into_ball([gz.z1() + dir[0] * delta, gz.z2() + dir[1] * delta]);

            let base = match bound_ratio(group, &z, &w, cfg) {
                Ok(r) => r,
                Err(_) => return None,
            };
            let mut transport_dev = 0.0f64;
            for e in &group.elements {
                let zg = z.transform(&e.mat);
                match bound_ratio(group, &zg, &w, cfg) {
                    Ok(r) => {
                        transport_dev =
                            transport_dev.max((r - base).abs() / base.max(r).max(1.0));
                    }
                    Err(_) => return None,
                }
            }
            let r_scale = bound_ratio(group, &z, &w, &rescaled).ok()?;
            let r_norm = bound_ratio(group, &z, &w, &toggled).ok()?;
            Some((
                transport_dev,
                (r_scale - base).abs() / base.max(r_scale).max(1.0),
                (r_norm - base).abs() / base.max(r_norm).max(1.0),
            ))
        })
        .collect();

    let mut report = InvarianceReport {
        samples: 0,
        max_transport_dev: 0.0,
        max_rescale_dev: 0.0,
        max_normalize_dev: 0.0,
    };
    for d in devs.into_iter().flatten() {
        report.samples += 1;
        report.max_transport_dev = report.max_transport_dev.max(d.0);
        report.max_rescale_dev = report.max_rescale_dev.max(d.1);
        report.max_normalize_dev = report.max_normalize_dev.max(d.2);
    }
    if report.samples == 0 {
        return Err(Error::EmptySample("no valid invariance samples".into()));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// cyclic closed-form residual
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct CyclicResidualReport {
    pub m: u32,
    pub samples: u64,
    pub used: u64,
    /// Max of `|direct - closed| / |direct|` over samples with
    /// `|direct| >= 1e-300`.
    pub max_relative: f64,
    /// Max of both evaluations on the `z1 = 0` ray (`m >= 2`), where the
    /// identity forces exact vanishing.
    pub max_axis_abs: f64,
    pub skipped_tiny: u64,
}

/// Compares the direct `m`-term character average against the grouped power
/// series for `<diag(zeta_m, 1)>` on the tube where the series converges.
/// The two evaluations share no code path, so agreement pins both.
pub fn lemma32_residual(m: u32, sample_count: u64, seed: u64) -> Result<CyclicResidualReport> {
    if m == 0 {
        return Err(Error::BadDivisor("cyclic order must be >= 1".into()));
    }
    let group = crate::groups::cyclic(m, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])?;
    let cfg = KernelConfig::default();

    let evals: Vec<Option<(f64, bool)>> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, tag("cyclic-residual"), i);
            use rand::Rng;
            // radii keep the pair inside the ball and inside the tube:
            // |z2|, |w2| <= 0.5 gives |1 - b| >= 0.75... >= 0.5 crude, and
            // |x| = ratio * |1 - b| <= 0.49 * 1.25 so |z1|^2 + |z2|^2 < 1
            let r2z = 0.5 * rng.gen::<f64>();
            let r2w = 0.5 * rng.gen::<f64>();
            let ph = |rng: &mut rand_chacha::ChaCha8Rng| {
                Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
            };
            let z2 = ph(&mut rng) * r2z;
            let w2 = ph(&mut rng) * r2w;
            let b = z2 * w2.conj();
            let ratio = log_uniform(&mut rng, 0.08, 0.49);
            let x_mag = ratio * (Complex64::new(1.0, 0.0) - b).norm();
            let r1 = x_mag.sqrt();
            let z1 = ph(&mut rng) * r1;
            let w1 = ph(&mut rng) * r1;
            let z = BallPoint::new(z1, z2).ok()?;
            let w = BallPoint::new(w1, w2).ok()?;
            let direct = averaged_kernel(&group, &z, &w, &cfg).ok()?;
            let closed = cyclic_closed_form(m, &z, &w, 10_000, &cfg).ok()?;
            if direct.norm() < 1e-300 {
                return Some((0.0, true));
            }
            Some(((direct - closed).norm() / direct.norm(), false))
        })
        .collect();

    let mut max_relative = 0.0f64;
    let mut used = 0u64;
    let mut skipped_tiny = 0u64;
    for e in evals.into_iter().flatten() {
        if e.1 {
            skipped_tiny += 1;
        } else {
            used += 1;
            max_relative = max_relative.max(e.0);
        }
    }
    if used == 0 {
        return Err(Error::EmptySample("cyclic residual sampler found no valid pairs".into()));
    }

    // axis ray z1 = 0: both evaluations must vanish identically for m >= 2
    let mut max_axis_abs = 0.0f64;
    if m >= 2 {
        for i in 0..200u64 {
            let mut rng = stream(seed, tag("cyclic-residual-axis"), i);
            use rand::Rng;
            let ph = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let z = BallPoint::new(Complex64::new(0.0, 0.0), ph * (0.8 * rng.gen::<f64>()))
                .expect("axis point inside");
            let w = uniform_ball(&mut rng);
            let direct = averaged_kernel(&group, &z, &w, &cfg)?;
            let closed = cyclic_closed_form(m, &z, &w, 10_000, &cfg)?;
            max_axis_abs = max_axis_abs.max(direct.norm()).max(closed.norm());
        }
    }

    Ok(CyclicResidualReport {
        m,
        samples: sample_count,
        used,
        max_relative,
        max_axis_abs,
        skipped_tiny,
    })
}

// ---------------------------------------------------------------------------
// per-region bounds
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct GeneralPairRow {
    pub g_index: usize,
    pub h_index: usize,
    /// `h^{-1} g`, the reflection relating the two regions.
    pub quotient_index: usize,
    pub count: u64,
    pub sup_ratio: f64,
    /// Sup of `R` over the transported region `U_{g h^{-1}} ∩ U_id`,
    /// sampled independently; the two sups agree up to sampling noise
    /// because `R` transports exactly.
    pub transported_count: u64,
    pub transported_sup: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionBoundReport {
    pub group: String,
    pub p: f64,
    pub epsilon: f64,
    /// Sup of `|k_gp| / |K(g.z, w)|` over the carved region of each `g`
    /// (its pair region minus the reflection-quotient intersections), where
    /// a single ball-kernel term dominates.
    pub carved: Vec<StratumRow>,
    /// Sup of `R` over `U_r(eps) ∩ U_id(eps)` for each reflection `r`.
    pub intersections: Vec<StratumRow>,
    /// General-position intersections `U_g ∩ U_h` with `h^{-1} g` a
    /// reflection, against their identity-anchored transports.
    pub general_pairs: Vec<GeneralPairRow>,
    /// Strata whose samplers produced no members (reported, not fatal).
    pub empty_strata: Vec<String>,
    pub failures: u64,
}

/// Elements `l` with `l^{-1} g` a reflection; their pair regions are the
/// ones carved out of `U_g` for the single-term bound.
fn reflection_neighbors(group: &ReflectionGroup, g: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for l in 0..group.order() {
        let q = group.product_index(group.inverse_index(l), g);
        if group.reflections.contains(&q) {
            out.push(l);
        }
    }
    out
}

pub fn region_bound_audit(
    group: &ReflectionGroup,
    cfg: &KernelConfig,
    eps: f64,
    sample_count: u64,
    seed: u64,
) -> Result<RegionBoundReport> {
    cfg.validate()?;
    assert!(eps > 0.0);
    let mut empty_strata = Vec::new();
    let mut failures = 0u64;

    // --- single-term domination on the carved regions ---
    let mut carved = Vec::new();
    let per_g = (sample_count / group.order() as u64).max(64);
    for (gi, elem) in group.elements.iter().enumerate() {
        let g = elem.mat;
        let neighbors = reflection_neighbors(group, gi);
        let t = tag(&format!("carved:{gi}"));
        let evals: Vec<Option<(f64, u64)>> = (0..per_g)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, t, i);
                let lo = (eps * 1e-6).min(1e-6).max(1e-12);
                let gap = log_uniform(&mut rng, lo, eps);
                let z = point_at_gap(&mut rng, gap);
                let gz = z.transform(&g);
                let delta = log_uniform(&mut rng, lo, eps);
                let dir = unit_direction(&mut rng);
                let w = project_into_ball([gz.z1() + dir[0] * delta, gz.z2() + dir[1] * delta]);
                if !in_u(&g, eps, &z, &w) {
                    return None;
                }
                if neighbors.iter().any(|&l| in_u(&group.elements[l].mat, eps, &z, &w)) {
                    return None; // carved out
                }
                let num = match k_gp(group, &z, &w, cfg) {
                    Ok(v) => v.norm(),
                    Err(_) => return Some((f64::NAN, 1)),
                };
                let den = match ball_kernel(&gz, &w, cfg) {
                    Ok(v) => v.norm(),
                    Err(_) => return Some((f64::NAN, 1)),
                };
                Some((num / den, 0))
            })
            .collect();
        let mut count = 0u64;
        let mut sup = 0.0f64;
        let mut arg: Option<u64> = None;
        for (i, e) in evals.into_iter().enumerate() {
            if let Some((r, fail)) = e {
                if fail == 1 || !r.is_finite() {
                    failures += 1;
                } else {
                    count += 1;
                    if r > sup || arg.is_none() {
                        sup = r;
                        arg = Some(i as u64);
                    }
                }
            }
        }
        let label = format!("carved:{gi}");
        if count == 0 {
            empty_strata.push(label.clone());
        }
        carved.push(StratumRow {
            stratum: label,
            count,
            sup_ratio: sup,
            argmax_z: None,
            argmax_w: None,
        });
    }

    // --- R on the reflection intersections U_r ∩ U_id ---
    let id = group.identity_index();
    let mut intersections = Vec::new();
    for &r in &group.reflections {
        let (count, sup) = sample_intersection_sup(group, cfg, r, id, eps, per_g, seed, &mut failures)?;
        let label = format!("refl:{r}");
        if count == 0 {
            empty_strata.push(label.clone());
        }
        intersections.push(StratumRow {
            stratum: label,
            count,
            sup_ratio: sup,
            argmax_z: None,
            argmax_w: None,
        });
    }

    // --- general-position pairs and their transports ---
    let mut general_pairs = Vec::new();
    for &r in &group.reflections {
        // one representative pair g = h r per reflection, h != id when possible
        let h = (0..group.order()).find(|&h| h != id && group.product_index(h, r) != h);
        let Some(h) = h else { continue };
        let g = group.product_index(h, r);
        if g == h {
            continue;
        }
        let (count, sup) = sample_intersection_sup(group, cfg, g, h, eps, per_g, seed, &mut failures)?;
        // transported region: U_{g h^{-1}} ∩ U_id, independent sampling
        let conj = group.product_index(g, group.inverse_index(h));
        let (t_count, t_sup) =
            sample_intersection_sup(group, cfg, conj, id, eps, per_g, seed ^ 0x9e37, &mut failures)?;
        if count == 0 {
            empty_strata.push(format!("pair:{g}:{h}"));
        }
        if t_count == 0 {
            empty_strata.push(format!("pair-transport:{conj}"));
        }
        general_pairs.push(GeneralPairRow {
            g_index: g,
            h_index: h,
            quotient_index: group.product_index(group.inverse_index(h), g),
            count,
            sup_ratio: sup,
            transported_count: t_count,
            transported_sup: t_sup,
        });
    }

    Ok(RegionBoundReport {
        group: group.name.clone(),
        p: cfg.p,
        epsilon: eps,
        carved,
        intersections,
        general_pairs,
        empty_strata,
        failures,
    })
}

/// Sup of `R` over sampled members of `U_g(eps) ∩ U_h(eps)` (quotient must
/// be a reflection for the sampler to aim properly); seeds include the
/// constructive witness so the stratum can never be empty.
#[allow(clippy::too_many_arguments)]
fn sample_intersection_sup(
    group: &ReflectionGroup,
    cfg: &KernelConfig,
    g_index: usize,
    h_index: usize,
    eps: f64,
    count: u64,
    seed: u64,
    failures: &mut u64,
) -> Result<(u64, f64)> {
    let g = group.elements[g_index].mat;
    let h = group.elements[h_index].mat;
    let quotient = group.product_index(group.inverse_index(h_index), g_index);
    let t = tag(&format!("isect:{g_index}:{h_index}"));
    let evals: Vec<Option<Result<f64>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, t, i);
            let (z, w) = crate::regions::intersection_candidate(group, g_index, h_index, eps, &mut rng)
                .expect("quotient is a reflection");
            if in_u(&g, eps, &z, &w) && in_u(&h, eps, &z, &w) {
                Some(bound_ratio(group, &z, &w, cfg))
            } else {
                None
            }
        })
        .collect();
    let mut n = 0u64;
    let mut sup = 0.0f64;
    for e in evals.into_iter().flatten() {
        match e {
            Ok(r) => {
                n += 1;
                sup = sup.max(r);
            }
            Err(_) => *failures += 1,
        }
    }
    // the hyperplane witness pair (z, h.z) always belongs to both regions
    let (z, w) = witness_pair(group, h_index, quotient, eps)?;
    if in_u(&g, eps, &z, &w) && in_u(&h, eps, &z, &w) {
        match bound_ratio(group, &z, &w, cfg) {
            Ok(r) => {
                n += 1;
                sup = sup.max(r);
            }
            Err(_) => *failures += 1,
        }
    }
    Ok((n, sup))
}

// ---------------------------------------------------------------------------
// applying the averaged projection
// ---------------------------------------------------------------------------

/// Built-in test functions: monomials `w1^a w2^b` of degree at most 4, and
/// three fixed random-coefficient combinations of them (coefficients are
/// seeded constants, not run inputs, so reports are comparable).
#[derive(Clone, Debug, Serialize, PartialEq)]
pub enum TestFn {
    Monomial { a: u32, b: u32 },
    Combo { id: u8 },
}

/// All monomial exponent pairs with `a + b <= 4`, in lexicographic order.
pub fn monomial_family() -> Vec<TestFn> {
    let mut out = Vec::new();
    for a in 0..=4u32 {
        for b in 0..=(4 - a) {
            out.push(TestFn::Monomial { a, b });
        }
    }
    out
}

impl TestFn {
    pub fn name(&self) -> String {
        match self {
            TestFn::Monomial { a, b } => format!("w1^{a} w2^{b}"),
            TestFn::Combo { id } => format!("combo{id}"),
        }
    }

    fn combo_coeffs(id: u8) -> Vec<Complex64> {
        let monos = monomial_family();
        let mut rng = stream(0xba11_0c0de, tag("combo-coeffs"), id as u64);
        monos
            .iter()
            .map(|_| {
                let re = crate::sampling::gaussian(&mut rng);
                let im = crate::sampling::gaussian(&mut rng);
                Complex64::new(re, im) / (monos.len() as f64).sqrt()
            })
            .collect()
    }

    pub fn eval(&self, w: &BallPoint) -> Complex64 {
        match self {
            TestFn::Monomial { a, b } => w.z1().powu(*a) * w.z2().powu(*b),
            TestFn::Combo { id } => {
                let coeffs = TestFn::combo_coeffs(*id);
                monomial_family()
                    .iter()
                    .zip(coeffs)
                    .map(|(m, c)| c * m.eval(w))
                    .sum()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadratureSpec {
    pub nodes: u64,
    pub seed: u64,
    /// Absolute floor for the inner edge of the adapted proposal's radial
    /// window, which otherwise tracks the node's boundary distance.
    pub window_floor: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 200_000, seed: 42, window_floor: 1e-14 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OperatorEstimate {
    pub value_re: f64,
    pub value_im: f64,
    pub std_err: f64,
    pub nodes: u64,
}

impl OperatorEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

/// Nodes closer to the origin than this use the uniform proposal alone: the
/// kernel is bounded there and the adapted annulus degenerates.
const ADAPTED_MIN_RADIUS: f64 = 0.3;

/// Defensive uniform fraction of the adapted mixture. The rest goes to the
/// annulus components, which carry the singular mass.
const UNIFORM_SHARE: f64 = 0.25;

/// Importance proposal adapted to the kernel's boundary geometry. In the
/// coordinate `u = <w, g.z/|z|>` the averaged kernel's `g`-term depends on
/// `w` only through `1 - |z| conj(u)`, singular at the real point
/// `c0 = 1/|z|` just outside the `u`-disk; the orthogonal coordinate is free.
/// Drawing `u` log-radially around `c0` and the free coordinate uniformly
/// keeps the importance weights' variance growing only logarithmically in
/// the boundary distance, where Euclidean shells around `g.z` would leave it
/// quadratic — exactly the regime the deep boundary strata probe. Half the
/// nodes stay uniform as a defensive floor, the density is closed-form, and
/// annulus draws that exit the ball count as zero, so the estimator is
/// unbiased with no rejection step.
struct AdaptedProposal {
    /// `g.z / |z|` for every group element; empty means uniform-only.
    dirs: Vec<[Complex64; 2]>,
    c0: f64,
    lo: f64,
    hi: f64,
    log_ratio: f64,
}

impl AdaptedProposal {
    fn new(group: &ReflectionGroup, z: &BallPoint, spec: &QuadratureSpec) -> AdaptedProposal {
        let r = z.norm();
        if r < ADAPTED_MIN_RADIUS {
            return AdaptedProposal {
                dirs: Vec::new(),
                c0: 0.0,
                lo: 0.0,
                hi: 0.0,
                log_ratio: 0.0,
            };
        }
        let dirs = group
            .elements
            .iter()
            .map(|e| {
                let gz = z.transform(&e.mat);
                [gz.z1() / r, gz.z2() / r]
            })
            .collect();
        let c0 = 1.0 / r;
        let lo = (0.5 * (c0 - 1.0)).max(spec.window_floor);
        let hi = c0 + 1.0;
        AdaptedProposal { dirs, c0, lo, hi, log_ratio: (hi / lo).ln() }
    }

    fn density(&self, w: &BallPoint) -> f64 {
        if self.dirs.is_empty() {
            return 1.0 / BALL_VOLUME;
        }
        let mut dens = UNIFORM_SHARE / BALL_VOLUME;
        let comp = (1.0 - UNIFORM_SHARE) / self.dirs.len() as f64;
        for dir in &self.dirs {
            let u = w.z1() * dir[0].conj() + w.z2() * dir[1].conj();
            let rho2 = (u - self.c0).norm_sqr();
            let rho = rho2.sqrt();
            if rho < self.lo || rho > self.hi {
                continue;
            }
            dens += comp / (2.0 * PI * rho2 * self.log_ratio * PI * (1.0 - u.norm_sqr()));
        }
        dens
    }

    /// One draw from component `k`; `None` when the annulus point falls
    /// outside the ball (a zero-contribution node).
    fn draw(&self, k: usize, rng: &mut ChaCha8Rng) -> Option<BallPoint> {
        let rho = log_uniform(rng, self.lo, self.hi);
        let u = Complex64::new(self.c0, 0.0) + Complex64::from_polar(rho, TAU * rng.gen::<f64>());
        let u2 = u.norm_sqr();
        if u2 >= 1.0 {
            return None;
        }
        let cap = (1.0 - u2).sqrt();
        let v = Complex64::from_polar(cap * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
        let dir = &self.dirs[k];
        let perp = [-dir[1].conj(), dir[0].conj()];
        BallPoint::new(u * dir[0] + v * perp[0], u * dir[1] + v * perp[1]).ok()
    }
}

/// Monte Carlo application of the averaged projection:
/// `(Q f)(z) = integral over the ball of K_G(z, w) f(w) dV(w)`.
///
/// Nodes alternate between uniform draws and draws from the adapted annulus
/// (see [`AdaptedProposal`]); annulus draws that exit the ball contribute
/// zero (the integrand vanishes off the ball) and stay in the average,
/// keeping the estimator unbiased. Errors with `QuadratureUnstable` when the
/// standard error exceeds 10% of the estimated magnitude (with a small
/// absolute floor so genuinely vanishing values are not spuriously
/// rejected).
pub fn operator_apply(
    group: &ReflectionGroup,
    f: &TestFn,
    z: &BallPoint,
    spec: &QuadratureSpec,
    cfg: &KernelConfig,
) -> Result<OperatorEstimate> {
    let est = operator_estimate(group, f, z, spec, cfg)?;
    let mag = est.value().norm();
    if est.std_err > 0.1 * mag.max(1e-3) {
        return Err(Error::QuadratureUnstable { std_err: est.std_err, magnitude: mag });
    }
    Ok(est)
}

/// The raw estimate behind [`operator_apply`], without the stability gate
/// (the norm scan aggregates many of these and applies its own per-cell
/// stability accounting).
pub fn operator_estimate(
    group: &ReflectionGroup,
    f: &TestFn,
    z: &BallPoint,
    spec: &QuadratureSpec,
    cfg: &KernelConfig,
) -> Result<OperatorEstimate> {
    cfg.validate()?;
    if spec.nodes == 0 {
        return Err(Error::EmptySample("quadrature budget is zero".into()));
    }
    let prop = AdaptedProposal::new(group, z, spec);
    let t = tag("operator");
    let values: Vec<Complex64> = (0..spec.nodes)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(spec.seed, t, i);
            let w = if prop.dirs.is_empty() || rng.gen::<f64>() < UNIFORM_SHARE {
                uniform_ball(&mut rng)
            } else {
                let k = rng.gen_range(0..prop.dirs.len());
                match prop.draw(k, &mut rng) {
                    Some(w) => w,
                    None => return Complex64::new(0.0, 0.0), // off the ball
                }
            };
            let dens = prop.density(&w);
            match averaged_kernel(group, z, &w, cfg) {
                Ok(k) => k * f.eval(&w) / dens,
                Err(_) => Complex64::new(0.0, 0.0), // null set
            }
        })
        .collect();

    let n = values.len() as f64;
    let mean = values.iter().sum::<Complex64>() / n;
    let var = values
        .iter()
        .map(|v| {
            let d = v - mean;
            d.norm_sqr()
        })
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let std_err = (var / n).sqrt();
    Ok(OperatorEstimate {
        value_re: mean.re,
        value_im: mean.im,
        std_err,
        nodes: spec.nodes,
    })
}

// ---------------------------------------------------------------------------
// weighted norm scan
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ScanCell {
    pub p: f64,
    pub test_fn: String,
    /// Estimated `integral |Q f|^p sigma dV`.
    pub numerator: f64,
    /// Estimated `integral |f|^p sigma dV`.
    pub denominator: f64,
    /// `(numerator / denominator)^{1/p}`.
    pub ratio: f64,
    pub num_std_err: f64,
    pub den_std_err: f64,
    /// Set when either estimate's standard error exceeds 10% of
    /// `max(numerator, denominator)` — typically the weight `sigma` becoming
    /// non-integrable at large `p` near the hyperplanes.
    pub unstable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightedScanReport {
    pub group: String,
    pub p_grid: Vec<f64>,
    pub outer_nodes: u64,
    pub inner_nodes: u64,
    pub den_nodes: u64,
    pub cells: Vec<ScanCell>,
}

/// Node count for the denominator integrals. They involve no inner
/// quadrature — one weight and one function evaluation per node — so a much
/// larger set costs next to nothing and keeps `den_std_err` out of the
/// stability gate except where `sigma` genuinely fails to be integrable.
const SCAN_DEN_NODES: u64 = 100_000;

/// Density of the scan's outer node law: half uniform, half an equal mixture
/// of per-hyperplane proposals whose transverse radius follows `r = u^2`
/// (density `|v|^{-3/2} / (4 pi)` on the unit `v`-disk). The weight `sigma`
/// blows up like a power of the hyperplane distance, so uniform nodes alone
/// give the `sigma / q` weights infinite variance already at `p = 3`; the
/// polynomial concentration keeps the variance finite for `p < 15/4` on
/// multiplicity-2 hyperplanes.
fn scan_outer_density(roots: &[Vec2], z: &BallPoint) -> f64 {
    let uni = 1.0 / BALL_VOLUME;
    if roots.is_empty() {
        return uni;
    }
    let mut hyp = 0.0;
    for rho in roots {
        // z = u tau + v rho with (tau, rho) unitary: Lebesgue factorizes
        let v2 = (z.z1() * rho[0].conj() + z.z2() * rho[1].conj()).norm_sqr();
        hyp += 1.0 / (4.0 * PI * v2.powf(0.75) * PI * (1.0 - v2));
    }
    0.5 * uni + 0.5 * hyp / roots.len() as f64
}

/// Draws one outer node from the law priced by [`scan_outer_density`].
fn scan_outer_point(roots: &[Vec2], rng: &mut ChaCha8Rng) -> BallPoint {
    if roots.is_empty() || rng.gen::<f64>() < 0.5 {
        return uniform_ball(rng);
    }
    let rho = roots[rng.gen_range(0..roots.len())];
    let tau = [-rho[1].conj(), rho[0].conj()];
    let r = rng.gen::<f64>().powi(2);
    let v = Complex64::from_polar(r, TAU * rng.gen::<f64>());
    let cap = (1.0 - r * r).sqrt();
    let u_r = cap * rng.gen::<f64>().sqrt();
    let u = Complex64::from_polar(u_r, TAU * rng.gen::<f64>());
    BallPoint::new(u * tau[0] + v * rho[0], u * tau[1] + v * rho[1])
        .expect("|u|^2 + |v|^2 < 1 by construction")
}

/// Ratio table `||Q f||_{L^p(sigma)} / ||f||_{L^p(sigma)}` over a grid of
/// exponents and test functions. The numerators share one set of
/// importance-sampled nodes (see [`scan_outer_density`]); `Q f` is evaluated
/// once per node per `f` and reused across the whole `p` grid. The
/// denominators, which need no inner quadrature, run on their own
/// [`SCAN_DEN_NODES`]-point set under the same law. Standard errors
/// propagate the outer sample variance plus the first-order contribution of
/// the inner quadrature errors.
pub fn weighted_norm_scan(
    group: &ReflectionGroup,
    p_grid: &[f64],
    family: &[TestFn],
    outer_nodes: u64,
    inner: &QuadratureSpec,
    cfg: &KernelConfig,
    seed: u64,
) -> Result<WeightedScanReport> {
    cfg.validate()?;
    for &p in p_grid {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::BadDivisor(format!("scan exponent must be in (1, inf); got {p}")));
        }
    }
    let roots: Vec<Vec2> = group.hyperplanes.iter().map(|h| h.root).collect();
    let t = tag("scan-outer");
    let outer: Vec<(BallPoint, f64)> = (0..outer_nodes)
        .map(|i| {
            let mut rng = stream(seed, t, i);
            let z = scan_outer_point(&roots, &mut rng);
            let q = scan_outer_density(&roots, &z);
            (z, q)
        })
        .collect();

    // same law, separate stream, for the inner-free denominator integrals
    let t_den = tag("scan-den");
    let den_set: Vec<(BallPoint, f64)> = (0..SCAN_DEN_NODES)
        .map(|i| {
            let mut rng = stream(seed, t_den, i);
            let z = scan_outer_point(&roots, &mut rng);
            let q = scan_outer_density(&roots, &z);
            (z, q)
        })
        .collect();
    // the weight does not depend on the test function: price each den node
    // once per exponent (NaN marks the null set of hyperplane points)
    let den_weights: Vec<Vec<f64>> = p_grid
        .iter()
        .map(|&p| {
            den_set
                .par_iter()
                .map(|(z, q)| match weight_sigma(group, z, p, cfg) {
                    Ok(s) => s / q,
                    Err(_) => f64::NAN,
                })
                .collect()
        })
        .collect();

    // deep nodes answer with noisier inner estimates (standard error grows
    // like the log of the boundary distance), so they get proportionally
    // more inner nodes; the multiplier is a deterministic function of the
    // node, keeping reruns byte-identical
    let inner_budget = |z: &BallPoint| -> u64 {
        let l = (2.0 / (1.0 - z.norm())).ln();
        let l_ref = (2.0 / 0.15f64).ln();
        let mult = (l / l_ref).powi(2).clamp(1.0, 16.0);
        (inner.nodes as f64 * mult).round() as u64
    };

    let mut cells = Vec::new();
    for f in family {
        // Q f at every outer node, once per f
        let qf: Vec<OperatorEstimate> = outer
            .par_iter()
            .enumerate()
            .map(|(i, (z, _))| {
                let mut node_spec = *inner;
                node_spec.nodes = inner_budget(z);
                node_spec.seed = seed ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15);
                operator_estimate(group, f, z, &node_spec, cfg)
            })
            .collect::<Result<_>>()?;
        let f_abs: Vec<f64> = den_set.iter().map(|(z, _)| f.eval(z).norm()).collect();
        for (pi, &p) in p_grid.iter().enumerate() {
            let mut num_terms = Vec::with_capacity(outer.len());
            let mut inner_var = 0.0f64;
            for ((z, q), est) in outer.iter().zip(&qf) {
                let weight = match weight_sigma(group, z, p, cfg) {
                    Ok(s) => s / q,
                    Err(_) => continue, // hyperplane point, null set
                };
                let qv = est.value().norm();
                num_terms.push(qv.powf(p) * weight);
                // d/dq (q^p) = p q^{p-1}: first-order inner-error propagation.
                // The per-node estimates use independent streams, so their
                // errors add in quadrature, not linearly.
                inner_var += (p * qv.powf(p - 1.0) * est.std_err * weight).powi(2);
            }
            let den_terms: Vec<f64> = f_abs
                .iter()
                .zip(&den_weights[pi])
                .filter(|(_, w)| w.is_finite())
                .map(|(fv, w)| fv.powf(p) * w)
                .collect();
            if num_terms.is_empty() || den_terms.is_empty() {
                return Err(Error::EmptySample("all scan nodes degenerate".into()));
            }
            let mean_stats = |terms: &[f64]| {
                let n = terms.len() as f64;
                let mean = terms.iter().sum::<f64>() / n;
                let var = terms.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (n - 1.0).max(1.0);
                (mean, (var / n).sqrt())
            };
            let (num, mut num_se) = mean_stats(&num_terms);
            let (den, den_se) = mean_stats(&den_terms);
            let n = num_terms.len() as f64;
            num_se = (num_se.powi(2) + inner_var / (n * n)).sqrt();
            let scale = num.max(den);
            let unstable = num_se > 0.1 * scale || den_se > 0.1 * scale;
            cells.push(ScanCell {
                p,
                test_fn: f.name(),
                numerator: num,
                denominator: den,
                ratio: (num / den).powf(1.0 / p),
                num_std_err: num_se,
                den_std_err: den_se,
                unstable,
            });
        }
    }
    Ok(WeightedScanReport {
        group: group.name.clone(),
        p_grid: p_grid.to_vec(),
        outer_nodes,
        inner_nodes: inner.nodes,
        den_nodes: SCAN_DEN_NODES,
        cells,
    })
}

// ---------------------------------------------------------------------------
// symmetry battery
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub group: String,
    pub samples: u64,
    pub checks: Vec<CheckRow>,
    /// Whether the harness detected a deliberately corrupted determinant
    /// (self-test of the two-forms comparison).
    pub mutation_detected: bool,
    pub pass: bool,
}

/// Relative gap between two complex values, floored at 1 to keep tiny
/// magnitudes from inflating the measure.
fn rel_gap(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

/// Five sampled identities of the averaged kernel, plus a mutation
/// self-test:
/// left/right average agreement, Hermitian symmetry, skew covariance under
/// every group element, modulus invariance of the weighted kernel, and
/// vanishing on the reflection hyperplanes.
pub fn symmetry_suite(
    group: &ReflectionGroup,
    sample_count: u64,
    seed: u64,
    cfg: &KernelConfig,
) -> Result<SymmetryReport> {
    cfg.validate()?;
    let t = tag("symmetry");
    #[derive(Clone, Copy, Default)]
    struct Devs {
        two_forms: f64,
        hermitian: f64,
        skew: f64,
        modulus: f64,
        vanishing: f64,
    }
    let devs: Vec<Option<Devs>> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, t, i);
            // mix of interior and near-boundary pairs
            let z = if i % 2 == 0 {
                uniform_ball(&mut rng)
            } else {
                let gap = log_uniform(&mut rng, 1e-4, 0.3);
                point_at_gap(&mut rng, gap)
            };
            let w = uniform_ball(&mut rng);
            let mut d = Devs::default();

            let left = averaged_kernel(group, &z, &w, cfg).ok()?;
            let right = averaged_kernel_dual(group, &z, &w, cfg).ok()?;
            d.two_forms = rel_gap(left, right);

            let swapped = averaged_kernel(group, &w, &z, cfg).ok()?;
            d.hermitian = rel_gap(left, swapped.conj());

            let base_ratio = bound_ratio(group, &z, &w, cfg).ok()?;
            for e in &group.elements {
                let gz = z.transform(&e.mat);
                let moved = averaged_kernel(group, &gz, &w, cfg).ok()?;
                d.skew = d.skew.max(rel_gap(moved, e.det.conj() * left));
                let moved_ratio = bound_ratio(group, &gz, &w, cfg).ok()?;
                d.modulus = d
                    .modulus
                    .max((moved_ratio - base_ratio).abs() / base_ratio.max(moved_ratio).max(1.0));
            }

            // hyperplane vanishing: put z on each hyperplane, compare the
            // kernel against the size of its own average's terms
            for h in &group.hyperplanes {
                let v = hyperplane_direction(&h.root);
                use rand::Rng;
                let s = 0.9 * rng.gen::<f64>();
                let zh = BallPoint::new(v[0] * s, v[1] * s).expect("inside");
                let k = averaged_kernel(group, &zh, &w, cfg).ok()?;
                let scale = dominating_sum(group, &zh, &w, cfg).ok()? / group.order() as f64;
                d.vanishing = d.vanishing.max(k.norm() / scale.max(1.0));
            }
            Some(d)
        })
        .collect();

    let mut agg = Devs::default();
    let mut used = 0u64;
    for d in devs.into_iter().flatten() {
        used += 1;
        agg.two_forms = agg.two_forms.max(d.two_forms);
        agg.hermitian = agg.hermitian.max(d.hermitian);
        agg.skew = agg.skew.max(d.skew);
        agg.modulus = agg.modulus.max(d.modulus);
        agg.vanishing = agg.vanishing.max(d.vanishing);
    }
    if used == 0 {
        return Err(Error::EmptySample("no valid symmetry samples".into()));
    }

    // mutation self-test: corrupt one determinant and re-run the two-forms
    // comparison; the harness must notice. The factor needs an imaginary
    // part: a real rescaling of an involution's (real) determinant shifts
    // both forms by the same amount and stays invisible.
    let mutation_detected = {
        let mut corrupted = group.clone();
        let last = corrupted.elements.len() - 1;
        corrupted.elements[last].det *= Complex64::new(1.0, 0.01);
        let mut worst = 0.0f64;
        for i in 0..200u64 {
            let mut rng = stream(seed, tag("mutation"), i);
            let z = uniform_ball(&mut rng);
            let w = uniform_ball(&mut rng);
            let left = averaged_kernel(&corrupted, &z, &w, cfg)?;
            let right = averaged_kernel_dual(&corrupted, &z, &w, cfg)?;
            worst = worst.max(rel_gap(left, right));
        }
        worst > 1e-12
    };

    let checks = vec![
        CheckRow {
            name: "left/right averages agree".into(),
            max_deviation: agg.two_forms,
            tolerance: 1e-12,
            pass: agg.two_forms <= 1e-12,
        },
        CheckRow {
            name: "hermitian symmetry".into(),
            max_deviation: agg.hermitian,
            tolerance: 1e-12,
            pass: agg.hermitian <= 1e-12,
        },
        CheckRow {
            name: "skew covariance".into(),
            max_deviation: agg.skew,
            tolerance: 1e-12,
            pass: agg.skew <= 1e-12,
        },
        CheckRow {
            name: "weighted modulus invariance".into(),
            max_deviation: agg.modulus,
            tolerance: 1e-10,
            pass: agg.modulus <= 1e-10,
        },
        CheckRow {
            name: "hyperplane vanishing".into(),
            max_deviation: agg.vanishing,
            tolerance: 1e-10,
            pass: agg.vanishing <= 1e-10,
        },
    ];
    let pass = checks.iter().all(|c| c.pass) && mutation_detected;
    Ok(SymmetryReport {
        group: group.name.clone(),
        samples: used,
        checks,
        mutation_detected,
        pass,
    })
}
