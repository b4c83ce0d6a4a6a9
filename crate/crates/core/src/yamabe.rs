//! Prescribed scalar curvature: `c_m Delta u - s u + s~ u^sigma = 0` rewritten
//! for the solver as `Delta u + a u - b u^sigma = 0`.

use serde::Serialize;

use crate::capacity::{classify_criticality, Criticality, SupersolutionDatum};
use crate::error::{Error, Result};
use crate::mesh::{PotentialProfile, RadialMesh};
use crate::solver::{
    monotone_iteration, multi_solution_sequence, uniform_lower_bound_check, Coefficients, LowerBoundReport,
    MonotoneOptions, Nonlinearity, SolveReport, Window,
};

#[derive(Debug, Clone)]
pub struct YamabeProblem {
    pub m: usize,
    /// Scalar curvature of the background metric.
    pub s: PotentialProfile,
    /// Target scalar curvature.
    pub s_tilde: PotentialProfile,
}

impl YamabeProblem {
    pub fn new(m: usize, s: PotentialProfile, s_tilde: PotentialProfile) -> Result<Self> {
        if m < 3 {
            return Err(Error::DimensionTooLow(m));
        }
        Ok(YamabeProblem { m, s, s_tilde })
    }

    pub fn c_m(&self) -> f64 {
        conformal_constant(self.m)
    }

    pub fn sigma(&self) -> f64 {
        yamabe_exponent(self.m)
    }

    /// `a = -s / c_m`, `b = -s~ / c_m`, `F(t) = t^sigma`.
    pub fn to_coefficients(&self) -> Result<(Coefficients, Nonlinearity)> {
        if self.m < 3 {
            return Err(Error::DimensionTooLow(self.m));
        }
        let k = -1.0 / self.c_m();
        Ok((
            Coefficients::new(self.s.clone().scaled(k), self.s_tilde.clone().scaled(k)),
            Nonlinearity::power(self.sigma()),
        ))
    }
}

/// `4(m-1)/(m-2)`.
pub fn conformal_constant(m: usize) -> f64 {
    4.0 * (m as f64 - 1.0) / (m as f64 - 2.0)
}

/// `(m+2)/(m-2)`.
pub fn yamabe_exponent(m: usize) -> f64 {
    (m as f64 + 2.0) / (m as f64 - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConformalSubcriticality {
    Subcritical,
    NotSubcritical,
    Inconclusive,
}

/// Compares `-s / c_m` with the Hardy weight of the mesh's model; when that
/// test fails, falls back to the capacity classifier on `fallback`.
pub fn conformal_laplacian_subcritical(
    yp: &YamabeProblem,
    mesh: &RadialMesh,
    fallback: Option<&[RadialMesh]>,
) -> Result<ConformalSubcriticality> {
    let model = mesh.model().ok_or_else(|| Error::InvalidInput("mesh carries no model manifold".into()))?;
    let (coeffs, _) = yp.to_coefficients()?;
    let chi = PotentialProfile::hardy(model, 1.0);
    let mut below = true;
    let mut strict = false;
    if crate::green::is_subcritical_model(model).is_subcritical() {
        for pts in [mesh.nodes(), mesh.quad_radii()] {
            let pts: Vec<f64> = pts.iter().cloned().filter(|r| *r > 0.0).collect();
            let a = coeffs.a.sample(&pts)?;
            let c = chi.sample(&pts)?;
            for (x, y) in a.iter().zip(&c) {
                let tol = 1e-12 * y.abs().max(1.0);
                if *x > y + tol {
                    below = false;
                } else if *x < y - tol {
                    strict = true;
                }
            }
        }
    } else {
        below = false;
    }
    if below && strict {
        return Ok(ConformalSubcriticality::Subcritical);
    }
    let Some(ladder) = fallback else {
        return Ok(ConformalSubcriticality::Inconclusive);
    };
    match classify_criticality(ladder, &coeffs.a, &SupersolutionDatum::constant(1.0)) {
        Ok(r) => Ok(match r.class {
            Criticality::Subcritical => ConformalSubcriticality::Subcritical,
            Criticality::Critical => ConformalSubcriticality::NotSubcritical,
            Criticality::Inconclusive => ConformalSubcriticality::Inconclusive,
        }),
        Err(Error::NotCoercive(_)) => Ok(ConformalSubcriticality::NotSubcritical),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformalReport {
    pub m: usize,
    pub inf_u: f64,
    pub sup_u: f64,
    /// `(inf u)^{4/(m-2)}`.
    pub c1: f64,
    /// `(sup u)^{4/(m-2)}`.
    pub c2: f64,
    /// The same exponent applied to the solver's a priori bounds.
    pub bound_c1: f64,
    pub bound_c2: f64,
    pub uniform_equivalence: bool,
    pub solve: SolveReport,
    pub ladder: Option<LowerBoundReport>,
}

impl ConformalReport {
    fn new(m: usize, solve: SolveReport, floor: f64, ladder: Option<LowerBoundReport>) -> Self {
        let e = 4.0 / (m as f64 - 2.0);
        let inf_u = solve.solution.min();
        let sup_u = solve.solution.max();
        let ladder_ok = ladder.as_ref().is_none_or(|l| l.above_floor);
        ConformalReport {
            m,
            inf_u,
            sup_u,
            c1: inf_u.max(0.0).powf(e),
            c2: sup_u.powf(e),
            bound_c1: solve.bounds.lower.max(0.0).powf(e),
            bound_c2: solve.bounds.upper.powf(e),
            uniform_equivalence: inf_u > floor && ladder_ok,
            solve,
            ladder,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConformalOptions {
    pub monotone: MonotoneOptions,
    /// `inf u` must exceed this for the deformation to count as uniformly
    /// equivalent.
    pub floor: f64,
    /// Also track `inf_Lambda u` along the exhaustion.
    pub track_ladder: bool,
}

impl Default for ConformalOptions {
    fn default() -> Self {
        ConformalOptions { monotone: MonotoneOptions::default(), floor: 1e-12, track_ladder: false }
    }
}

fn require_subcritical(yp: &YamabeProblem, mesh: &RadialMesh) -> Result<()> {
    if mesh.p() != 2.0 {
        return Err(Error::UnsupportedExponent(mesh.p()));
    }
    if conformal_laplacian_subcritical(yp, mesh, None)? == ConformalSubcriticality::NotSubcritical {
        return Err(Error::NotSubcritical("conformal Laplacian".into()));
    }
    Ok(())
}

/// Solves for the conformal factor with boundary value `eps` and reports the
/// metric bounds `C_1 <~g> <= <g~> <= C_2 <g>`.
pub fn run_prescribed_curvature(
    yp: &YamabeProblem,
    mesh: &RadialMesh,
    eps: f64,
    window: &Window,
    opts: &ConformalOptions,
) -> Result<ConformalReport> {
    require_subcritical(yp, mesh)?;
    let (coeffs, f) = yp.to_coefficients()?;
    let solve = monotone_iteration(mesh, &coeffs, &f, eps, window, &opts.monotone)?;
    let ladder = if opts.track_ladder {
        Some(uniform_lower_bound_check(mesh, &coeffs.a, &coeffs.b, &f, eps, window, &opts.monotone.ladder, opts.floor)?)
    } else {
        None
    };
    Ok(ConformalReport::new(yp.m, solve, opts.floor, ladder))
}

/// Deformations with shrinking boundary values and shrinking `C_2`.
pub fn prescribed_curvature_sequence(
    yp: &YamabeProblem,
    mesh: &RadialMesh,
    eps0: f64,
    window: &Window,
    count: usize,
    opts: &ConformalOptions,
) -> Result<Vec<ConformalReport>> {
    require_subcritical(yp, mesh)?;
    let (coeffs, f) = yp.to_coefficients()?;
    let runs = multi_solution_sequence(mesh, &coeffs, &f, eps0, window, count, &opts.monotone)?;
    Ok(runs.into_iter().map(|s| ConformalReport::new(yp.m, s, opts.floor, None)).collect())
}
