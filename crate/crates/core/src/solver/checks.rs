//! Discrete diagnostics: pasting of supersolutions, the necessary spectral
//! condition on `{b <= 0}`, and ladder-uniform lower and upper bounds.

use serde::Serialize;

use crate::error::Result;
use crate::mesh::{residual_sampled, DiscreteFunction, PotentialProfile, RadialMesh};
use crate::spectral::fundamental_tone;

use super::dirichlet::{dirichlet_solve_detailed, BoundaryData, Problem, SolverOptions};
use super::monotone::{Ladder, Window};
use super::Nonlinearity;

/// Default tolerance on the node-scaled residual of a pasted minimum.
pub const TOL_PASTE: f64 = 1e-6;

/// Tolerance on the node-scaled residual of an input supersolution.
pub const TOL_SUPER: f64 = 1e-9;

/// `R_i / S_i` at every node; nodes with no contributions score zero.
fn node_scaled(mesh: &RadialMesh, vq: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let (r, s) = residual_sampled(mesh, vq, w)?;
    Ok(r.iter().zip(&s).map(|(r, s)| if *s > 0.0 { r / s } else { 0.0 }).collect())
}

fn min_free(mesh: &RadialMesh, v: &[f64]) -> f64 {
    let (lo, hi) = mesh.free_range();
    v[lo..hi].iter().cloned().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub node: usize,
    pub r: f64,
    pub scaled_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PastingReport {
    pub w1_supersolution: bool,
    pub w2_supersolution: bool,
    pub min_scaled_residual: f64,
    pub tolerance: f64,
    pub passes: bool,
    pub violations: Vec<Violation>,
}

/// Checks that the nodewise minimum of two discrete supersolutions is again
/// a supersolution, up to `tol` on the node-scaled residual.
pub fn pasting_min_check(
    mesh: &RadialMesh,
    v: &PotentialProfile,
    w1: &DiscreteFunction,
    w2: &DiscreteFunction,
    tol: f64,
) -> Result<PastingReport> {
    let vq = v.on_mesh(mesh)?;
    let (lo, hi) = mesh.free_range();
    let s1 = min_free(mesh, &node_scaled(mesh, &vq, &w1.values)?);
    let s2 = min_free(mesh, &node_scaled(mesh, &vq, &w2.values)?);
    let m: Vec<f64> = w1.values.iter().zip(&w2.values).map(|(a, b)| a.min(*b)).collect();
    let rm = node_scaled(mesh, &vq, &m)?;
    let violations: Vec<Violation> = (lo..hi)
        .filter(|&i| rm[i] < -tol)
        .map(|i| Violation { node: i, r: mesh.nodes()[i], scaled_residual: rm[i] })
        .collect();
    Ok(PastingReport {
        w1_supersolution: s1 >= -TOL_SUPER,
        w2_supersolution: s2 >= -TOL_SUPER,
        min_scaled_residual: min_free(mesh, &rm),
        tolerance: tol,
        passes: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Neighborhood {
    pub lo: f64,
    pub hi: f64,
    pub tone: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BellanecReport {
    /// `||b_-||_inf inf_{B_0} F(u)/u^{p-1}`.
    pub lhs: f64,
    /// `min_eps lambda_a(Omega_eps) / (1 - eps)`.
    pub rhs: f64,
    pub eps: Vec<f64>,
    pub tones: Vec<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NecessaryReport {
    /// `u` satisfies `Delta_p u + a u^{p-1} - b F(u) <= 0` on the mesh.
    pub supersolution: bool,
    pub b0_empty: bool,
    pub neighborhoods: Vec<Neighborhood>,
    pub final_tone: Option<f64>,
    pub passes: bool,
    pub bellanec: Option<BellanecReport>,
}

/// Hull `[r_lo, r_hi]` of the nodes where `pred` holds.
fn hull(mesh: &RadialMesh, vals: &[f64], pred: impl Fn(f64) -> bool) -> Option<(usize, usize)> {
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| pred(vals[i])).collect();
    Some((*idx.first()?, *idx.last()?)).map(|(a, b)| {
        // Widen degenerate hulls by one element on each side.
        if a == b {
            (a.saturating_sub(1), (b + 1).min(mesh.n_nodes() - 1))
        } else {
            (a, b)
        }
    })
}

fn tone_on(mesh: &RadialMesh, a: &PotentialProfile, lo: f64, hi: f64) -> Result<f64> {
    let n = ((mesh.n_elements() as f64) * (hi - lo) / (mesh.outer_radius() - mesh.inner_radius())).ceil().max(100.0)
        as usize;
    Ok(fundamental_tone(&mesh.with_interval(lo, hi, n)?, a)?.lambda)
}

/// `lambda_a` on shrinking neighbourhoods of `B_0 = {b <= 0}`, which must
/// end up nonnegative when a bounded positive supersolution exists.
pub fn necessary_condition_check(
    mesh: &RadialMesh,
    a: &PotentialProfile,
    b: &PotentialProfile,
    f: &Nonlinearity,
    u: &DiscreteFunction,
    tol: f64,
) -> Result<NecessaryReport> {
    let p = mesh.p();
    let (aq, bq) = (a.on_mesh(mesh)?, b.on_mesh(mesh)?);
    let pb = Problem { mesh, aq: &aq, bq: &bq, f };
    let (r, s) = pb.residual(&u.values)?;
    let scaled: Vec<f64> = r.iter().zip(&s).map(|(r, s)| if *s > 0.0 { r / s } else { 0.0 }).collect();
    let supersolution = min_free(mesh, &scaled) >= -TOL_SUPER && u.values.iter().all(|x| *x > 0.0);
    let bn = b.on_nodes(mesh)?;
    let nodes = mesh.nodes();
    let Some((i0, i1)) = hull(mesh, &bn, |x| x <= 0.0) else {
        return Ok(NecessaryReport {
            supersolution,
            b0_empty: true,
            neighborhoods: Vec::new(),
            final_tone: None,
            passes: true,
            bellanec: None,
        });
    };
    let (r0, r1) = (nodes[i0], nodes[i1]);
    let (inner, outer) = (mesh.inner_radius(), mesh.outer_radius());
    let span = outer - inner;
    let mut neighborhoods = Vec::new();
    for k in 0..5 {
        let d = 0.25 * span * 0.5f64.powi(k);
        let (lo, hi) = ((r0 - d).max(inner), (r1 + d).min(outer));
        neighborhoods.push(Neighborhood { lo, hi, tone: tone_on(mesh, a, lo, hi)? });
    }
    let final_tone = neighborhoods.last().map(|n| n.tone);

    let bm: Vec<f64> = bn.iter().map(|x| (-x).max(0.0)).collect();
    let bm_max = bm.iter().cloned().fold(0.0, f64::max);
    let bellanec = if bm_max > 0.0 {
        let inf_ratio =
            (0..nodes.len()).filter(|&i| bn[i] <= 0.0).map(|i| f.ratio(u.values[i], p)).fold(f64::INFINITY, f64::min);
        let lhs = bm_max * inf_ratio;
        let eps: Vec<f64> = (1..=9).map(|k| 0.1 * k as f64).collect();
        let mut tones = Vec::new();
        let mut rhs = f64::INFINITY;
        for &e in &eps {
            let (j0, j1) = hull(mesh, &bm, |x| x >= (1.0 - e) * bm_max).expect("b_- attains its max");
            let t = tone_on(mesh, a, nodes[j0], nodes[j1])?;
            tones.push(t);
            rhs = rhs.min(t / (1.0 - e));
        }
        Some(BellanecReport { lhs, rhs, eps, tones, holds: lhs <= rhs * (1.0 + 1e-6) })
    } else {
        None
    };
    Ok(NecessaryReport {
        supersolution,
        b0_empty: false,
        passes: final_tone.is_none_or(|t| t >= -tol),
        neighborhoods,
        final_tone,
        bellanec,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub radii: Vec<f64>,
    /// `inf_Lambda z` on each rung.
    pub inf_window: Vec<f64>,
    pub running_min: Vec<f64>,
    /// Relative change of the running minimum over the last two rungs.
    pub relative_change: f64,
    pub stable: bool,
    pub above_floor: bool,
    /// `inf_Lambda z` strictly decreasing along the whole ladder.
    pub decaying: bool,
}

fn solve_rung(
    m: &RadialMesh,
    a: &PotentialProfile,
    b: &PotentialProfile,
    f: &Nonlinearity,
    eps: f64,
) -> Result<DiscreteFunction> {
    let (aq, bq) = (a.on_mesh(m)?, b.on_mesh(m)?);
    let opts = SolverOptions { tol: 1e-11, ..Default::default() };
    Ok(dirichlet_solve_detailed(m, &aq, &bq, f, BoundaryData::uniform(eps), &opts, None)?.solution)
}

/// Solves `Delta_p z + a z^{p-1} - b_+ F(z) = 0`, `z = eps` on each rung
/// and tracks `inf_Lambda z`.
#[allow(clippy::too_many_arguments)]
pub fn uniform_lower_bound_check(
    mesh: &RadialMesh,
    a: &PotentialProfile,
    b: &PotentialProfile,
    f: &Nonlinearity,
    eps: f64,
    window: &Window,
    ladder: &Ladder,
    floor: f64,
) -> Result<LowerBoundReport> {
    let bp = b.clone().positive_part();
    let mut radii = Vec::new();
    let mut inf_window = Vec::new();
    let mut running_min = Vec::new();
    for m in ladder.meshes(mesh)? {
        let z = solve_rung(&m, a, &bp, f, eps)?;
        let v = window.min_of(&m, &z.values);
        radii.push(m.outer_radius());
        inf_window.push(v);
        running_min.push(running_min.last().map_or(v, |x: &f64| x.min(v)));
    }
    let n = running_min.len();
    let relative_change =
        if n >= 2 { (running_min[n - 2] - running_min[n - 1]).abs() / running_min[n - 2].abs() } else { 0.0 };
    Ok(LowerBoundReport {
        stable: relative_change < 0.01,
        above_floor: running_min[n - 1] > floor,
        decaying: inf_window.windows(2).all(|w| w[1] < w[0]),
        radii,
        inf_window,
        running_min,
        relative_change,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UpperBoundReport {
    pub radii: Vec<f64>,
    pub sup: Vec<f64>,
    /// Level with `F(t)/t^{p-1} >= c` for `t >= alpha`, `alpha > eps`.
    pub alpha: f64,
    /// Per rung: `None` when `{z > alpha}` is empty, else whether
    /// `sup_Omega z = sup_Lambda z`.
    pub localized: Vec<Option<bool>>,
    /// Radii outside the window where `A > c B`.
    pub condition_violations: Vec<f64>,
    /// Relative growth of `sup z` over the last two rungs.
    pub growth: f64,
    pub bounded: bool,
}

/// Tracks `sup z` along the ladder for `Delta_p z + A z^{p-1} - B F(z) = 0`,
/// `z = eps`, and checks that the maximum sits in the window once `z`
/// exceeds the level `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn uniform_upper_bound_check(
    mesh: &RadialMesh,
    a: &PotentialProfile,
    b: &PotentialProfile,
    f: &Nonlinearity,
    eps: f64,
    window: &Window,
    c: f64,
    ladder: &Ladder,
) -> Result<UpperBoundReport> {
    let p = mesh.p();
    let alpha = f.level(c, p)?.max(eps) * (1.0 + 1e-9);
    let mut radii = Vec::new();
    let mut sup = Vec::new();
    let mut localized = Vec::new();
    let mut condition_violations = Vec::new();
    for m in ladder.meshes(mesh)? {
        let (aq, bq) = (a.on_mesh(&m)?, b.on_mesh(&m)?);
        for ((r, x), y) in m.quad_radii().iter().zip(&aq).zip(&bq) {
            if !window.contains(*r) && *x > c * y && !condition_violations.iter().any(|v: &f64| (v - r).abs() < 1e-12) {
                condition_violations.push(*r);
            }
        }
        let z = solve_rung(&m, a, b, f, eps)?;
        let top = z.max();
        localized.push(if top > alpha {
            let wmax = window.max_of(&m, &z.values);
            Some((top - wmax).abs() <= 1e-9 * top.abs())
        } else {
            None
        });
        radii.push(m.outer_radius());
        sup.push(top);
    }
    let n = sup.len();
    let growth = if n >= 2 { (sup[n - 1] - sup[n - 2]) / sup[n - 2].abs() } else { 0.0 };
    Ok(UpperBoundReport { radii, sup, alpha, localized, condition_violations, growth, bounded: growth < 0.01 })
}
