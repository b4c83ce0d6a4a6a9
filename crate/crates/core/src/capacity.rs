//! `Q_V`-capacitors of a ball `K = B_a` inside `Omega = B_b`, capacities of
//! `K` in the whole model, and the ground-state alternative read off the
//! capacity sequence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, RadialFunction};
use crate::mesh::{energy_sampled, BoundaryKind, DiscreteFunction, PotentialProfile, RadialMesh};
use crate::quad;
use crate::solver::{dirichlet_solve_detailed, BoundaryData, Nonlinearity, SolverOptions};

/// The supersolution `g` fixing the capacitor's value on `K`.
#[derive(Debug, Clone)]
pub struct SupersolutionDatum {
    pub value: RadialFunction,
    pub derivative: RadialFunction,
}

impl SupersolutionDatum {
    pub fn new(value: RadialFunction, derivative: RadialFunction) -> Self {
        SupersolutionDatum { value, derivative }
    }

    pub fn constant(c: f64) -> Self {
        SupersolutionDatum { value: RadialFunction::constant(c), derivative: RadialFunction::constant(0.0) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    /// `Q_V(u)` over `Omega`, including the part on `K` where `u = g`.
    pub value: f64,
    pub capacitor: DiscreteFunction,
    /// Boundary-flux expression of the same quantity.
    pub flux_value: f64,
    pub inner: f64,
    pub outer: f64,
    pub g_at_inner: f64,
}

/// `Q_V(g)` restricted to `K = B_a`.
fn energy_on_k(mm: &ModelManifold, v: &PotentialProfile, g: &SupersolutionDatum, a: f64) -> Result<f64> {
    let p = mm.p();
    let err = std::cell::RefCell::new(None);
    let (val, _) = quad::integrate(
        |r| {
            let dens = match mm.measure(r) {
                Ok(d) => d,
                Err(e) => {
                    *err.borrow_mut() = Some(e);
                    return 0.0;
                }
            };
            if dens == 0.0 {
                return 0.0;
            }
            let gv = g.value.eval(r);
            let vv = match v.eval(r) {
                Ok(x) => x,
                Err(e) => {
                    *err.borrow_mut() = Some(e);
                    return 0.0;
                }
            };
            (g.derivative.eval(r).abs().powf(p) - vv * gv.abs().powf(p)) * dens
        },
        0.0,
        a,
        1e-12,
        1e-300,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(val / p)
}

/// Solves `Q'_V(u) = 0` on the annulus with `u = g(a)` inside and `u = 0`
/// outside.
pub fn capacitor_solve(mesh: &RadialMesh, v: &PotentialProfile, g: &SupersolutionDatum) -> Result<CapacityResult> {
    if mesh.inner_boundary() != BoundaryKind::Essential || !(mesh.inner_radius() > 0.0) {
        return Err(Error::InvalidInput("capacitors need an annulus mesh with a positive inner radius".into()));
    }
    let mm = mesh.model().ok_or_else(|| Error::InvalidInput("capacitors need a model manifold mesh".into()))?.clone();
    let (a, b) = (mesh.inner_radius(), mesh.outer_radius());
    let ga = g.value.eval(a);
    if !(ga > 0.0) {
        return Err(Error::InvalidInput(format!("g must be positive on the boundary of K, g({a}) = {ga}")));
    }
    let p = mesh.p();
    let vq = v.on_mesh(mesh)?;
    let zero = vec![0.0; vq.len()];
    let opts = SolverOptions { tol: 1e-11, ..Default::default() };
    let sol = dirichlet_solve_detailed(
        mesh,
        &vq,
        &zero,
        &Nonlinearity::power(2.0),
        BoundaryData { inner: ga, outer: 0.0 },
        &opts,
        None,
    )?;
    let u = sol.solution;
    let annulus = energy_sampled(mesh, &vq, &u.values)?;
    let value = annulus + energy_on_k(&mm, v, g, a)?;
    // Consistent boundary flux: R_0 = Q'_V(u)[N_0] = -|u'|^{p-2} u'(a) dsigma.
    let (r, _) = crate::mesh::residual_sampled(mesh, &vq, &u.values)?;
    let area = mm.measure(a)?;
    let dg = g.derivative.eval(a);
    let flux_value = (area * ga * dg.abs().powf(p - 2.0) * dg + ga * r[0]) / p;
    Ok(CapacityResult { value, capacitor: u, flux_value, inner: a, outer: b, g_at_inner: ga })
}

/// Annuli `[a, a f^j]`, `j = 1..=rungs`, with `n` geometric elements per
/// factor `f`. The node sets are nested, so the discrete capacities are
/// non-increasing along the ladder.
pub fn capacity_ladder(mm: &ModelManifold, inner: f64, factor: f64, rungs: usize, n: usize) -> Result<Vec<RadialMesh>> {
    if !(factor > 1.0) || rungs == 0 {
        return Err(Error::InvalidInput(format!("ladder needs factor > 1 and rungs >= 1, got {factor}, {rungs}")));
    }
    (1..=rungs).map(|j| RadialMesh::annulus_geometric(mm, inner, inner * factor.powi(j as i32), n * j)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalCapacity {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Last value of the sequence.
    pub estimate: f64,
    /// Values non-increasing along the ladder.
    pub monotone: bool,
    /// Capacitors increase nodewise along the ladder and stay below `g`.
    pub nested: bool,
    #[serde(skip)]
    pub capacitors: Vec<DiscreteFunction>,
}

/// `cap(K, Omega_j, g)` on every rung.
pub fn global_capacity(ladder: &[RadialMesh], v: &PotentialProfile, g: &SupersolutionDatum) -> Result<GlobalCapacity> {
    if ladder.is_empty() {
        return Err(Error::InvalidInput("empty ladder".into()));
    }
    let mut radii = Vec::new();
    let mut values = Vec::new();
    let mut caps = Vec::new();
    for m in ladder {
        let c = capacitor_solve(m, v, g)?;
        radii.push(c.outer);
        values.push(c.value);
        caps.push(c.capacitor);
    }
    let slack = |x: f64| 1e-9 * x.abs().max(1e-300);
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + slack(w[0]));
    let mut nested = true;
    for (j, m) in ladder.iter().enumerate() {
        let u = &caps[j].values;
        for (i, &r) in m.nodes().iter().enumerate() {
            let gr = g.value.eval(r);
            if u[i] > gr + slack(gr) || u[i] < -slack(gr) {
                nested = false;
            }
            if j + 1 < ladder.len() {
                let next = ladder[j + 1].eval_at(&caps[j + 1].values, r);
                if next < u[i] - 1e-6 * gr.abs() {
                    nested = false;
                }
            }
        }
    }
    Ok(GlobalCapacity { estimate: *values.last().unwrap(), radii, values, monotone, nested, capacitors: caps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalityReport {
    pub class: Criticality,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `1e-3` times the first rung's value.
    pub floor: f64,
    /// Ratio of the last two increments of `1 / cap_j`.
    pub increment_ratio: f64,
    /// Limit of `cap_j` extrapolated from the increments of `1 / cap_j`.
    pub extrapolated: f64,
    pub relative_change: f64,
    /// Last capacitor divided by its value at the inner radius.
    pub ground_state: Option<DiscreteFunction>,
    /// `Q_V` of the normalized capacitors along the ladder.
    pub null_sequence: Vec<f64>,
}

/// Reads the ground-state alternative off the global capacity sequence.
pub fn classify_criticality(
    ladder: &[RadialMesh],
    v: &PotentialProfile,
    g: &SupersolutionDatum,
) -> Result<CriticalityReport> {
    let gc = global_capacity(ladder, v, g)?;
    let vals = &gc.values;
    let n = vals.len();
    let floor = 1e-3 * vals[0];
    let last = vals[n - 1];
    let relative_change = if n >= 2 { (vals[n - 2] - last).abs() / vals[n - 2].abs() } else { f64::INFINITY };
    let inv: Vec<f64> = vals.iter().map(|v| 1.0 / v).collect();
    let (ratio, extrapolated) = if n >= 3 {
        let d1 = inv[n - 2] - inv[n - 3];
        let d2 = inv[n - 1] - inv[n - 2];
        let rho = d2 / d1;
        let limit = if (0.0..1.0).contains(&rho) {
            1.0 / (inv[n - 1] + d2 * rho / (1.0 - rho))
        } else if rho >= 1.0 {
            0.0
        } else {
            last
        };
        (rho, limit)
    } else {
        (f64::NAN, last)
    };
    let class = if last > floor && relative_change < 0.01 {
        Criticality::Subcritical
    } else if last <= floor || (ratio >= 0.9 && extrapolated <= floor) {
        Criticality::Critical
    } else {
        Criticality::Inconclusive
    };
    let p = ladder[0].p();
    let a = ladder[0].inner_radius();
    let ga = g.value.eval(a);
    let null_sequence = vals.iter().map(|c| c / ga.powf(p)).collect();
    let ground_state =
        if class == Criticality::Critical { gc.capacitors.last().map(|u| u.map(|x| x / ga)) } else { None };
    Ok(CriticalityReport {
        class,
        radii: gc.radii,
        values: gc.values,
        floor,
        increment_ratio: ratio,
        extrapolated,
        relative_change,
        ground_state,
        null_sequence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_annulus_capacity() {
        let mm = ModelManifold::flat(3, 2.0).unwrap();
        let mesh = RadialMesh::annulus(&mm, 1.0, 2.0, 400).unwrap();
        let c = capacitor_solve(&mesh, &PotentialProfile::zero(), &SupersolutionDatum::constant(1.0)).unwrap();
        assert!((c.value / (4.0 * PI) - 1.0).abs() < 1e-4);
        assert!((c.flux_value / c.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn homogeneity_in_g() {
        let mm = ModelManifold::flat(3, 3.0).unwrap();
        let mesh = RadialMesh::annulus(&mm, 1.0, 2.0, 200).unwrap();
        let c1 = capacitor_solve(&mesh, &PotentialProfile::zero(), &SupersolutionDatum::constant(1.0)).unwrap();
        let c2 = capacitor_solve(&mesh, &PotentialProfile::zero(), &SupersolutionDatum::constant(2.0)).unwrap();
        assert!((c2.value / c1.value - 8.0).abs() < 1e-8);
    }
}
