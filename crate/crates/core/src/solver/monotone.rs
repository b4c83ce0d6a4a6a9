use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{DiscreteFunction, PotentialProfile, RadialMesh};

use super::dirichlet::{dirichlet_solve_detailed, ensure_coercive, BoundaryData, Problem, SolverOptions};
use super::Nonlinearity;

/// The radial window `Lambda = [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("invalid window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r <= self.hi
    }

    /// `1_Lambda` times a profile.
    pub fn indicator(&self, v: PotentialProfile) -> PotentialProfile {
        v.restricted(self.lo, self.hi)
    }

    fn nodes<'a>(&'a self, mesh: &'a RadialMesh) -> impl Iterator<Item = usize> + 'a {
        (0..mesh.n_nodes()).filter(move |&i| self.contains(mesh.nodes()[i]))
    }

    /// Smallest nodal value inside the window.
    pub fn min_of(&self, mesh: &RadialMesh, v: &[f64]) -> f64 {
        self.nodes(mesh).map(|i| v[i]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_of(&self, mesh: &RadialMesh, v: &[f64]) -> f64 {
        self.nodes(mesh).map(|i| v[i]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// An exhaustion `Omega_0 ⊂ Omega_1 ⊂ ...` by outer radii growing geometrically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ladder {
    pub factor: f64,
    pub rungs: usize,
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder { factor: 1.5, rungs: 5 }
    }
}

impl Ladder {
    pub fn radii(&self, mesh: &RadialMesh) -> Vec<f64> {
        (0..self.rungs).map(|j| mesh.outer_radius() * self.factor.powi(j as i32)).collect()
    }

    /// Rung 0 is the mesh itself; later rungs keep its spacing.
    pub fn meshes(&self, mesh: &RadialMesh) -> Result<Vec<RadialMesh>> {
        if !(self.factor > 1.0) || self.rungs == 0 {
            return Err(Error::InvalidInput(format!("ladder needs factor > 1 and rungs >= 1, got {self:?}")));
        }
        let (a, b) = (mesh.inner_radius(), mesh.outer_radius());
        let mut out = vec![mesh.clone()];
        for j in 1..self.rungs {
            let r = b * self.factor.powi(j as i32);
            let n = ((mesh.n_elements() as f64) * (r - a) / (b - a)).ceil() as usize;
            out.push(mesh.with_interval(a, r, n)?);
        }
        Ok(out)
    }
}

/// `a` and `b` of `Delta_p u + a u^{p-1} - b F(u) = 0`.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub a: PotentialProfile,
    pub b: PotentialProfile,
}

impl Coefficients {
    pub fn new(a: PotentialProfile, b: PotentialProfile) -> Self {
        Coefficients { a, b }
    }

    pub fn b_plus(&self) -> PotentialProfile {
        self.b.clone().positive_part()
    }

    pub fn b_minus(&self) -> PotentialProfile {
        self.b.clone().negative_part()
    }

    /// `b_- = 0` at every node and quadrature point outside the window.
    pub fn b_minus_supported_in(&self, mesh: &RadialMesh, window: &Window) -> Result<bool> {
        let bm = self.b_minus();
        for pts in [mesh.nodes(), mesh.quad_radii()] {
            let v = bm.sample(pts)?;
            if pts.iter().zip(&v).any(|(r, x)| *x > 0.0 && !window.contains(*r)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `a <= 0` at every quadrature point outside the window.
    pub fn a_nonpositive_outside(&self, mesh: &RadialMesh, window: &Window) -> Result<bool> {
        let v = self.a.on_mesh(mesh)?;
        Ok(mesh.quad_radii().iter().zip(&v).all(|(r, x)| *x <= 0.0 || window.contains(*r)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaReport {
    pub delta: f64,
    /// `C_Lambda(eps)`: largest sup-norm of `phi_0` across the ladder.
    pub c_lambda: f64,
    pub min_w: f64,
    pub radii: Vec<f64>,
    pub sup_per_rung: Vec<f64>,
}

fn min_on_window(w: &PotentialProfile, mesh: &RadialMesh, window: &Window) -> Result<f64> {
    let mut m = f64::INFINITY;
    for pts in [mesh.nodes(), mesh.quad_radii()] {
        let inside: Vec<f64> = pts.iter().cloned().filter(|r| window.contains(*r) && *r > 0.0).collect();
        for v in w.sample(&inside)? {
            m = m.min(v);
        }
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidInput(format!("spectral-gap weight W must be positive on the window, min = {m}")));
    }
    Ok(m)
}

fn sum_sampled(mesh: &RadialMesh, a: &PotentialProfile, w: &PotentialProfile, window: &Window) -> Result<Vec<f64>> {
    let aq = a.on_mesh(mesh)?;
    let wq = window.indicator(w.clone()).on_mesh(mesh)?;
    Ok(aq.iter().zip(&wq).map(|(x, y)| x + y).collect())
}

/// `delta = (min_Lambda W) C^{p-1} / F(C)` with `C = C_Lambda(eps)`
/// estimated over the ladder.
#[allow(clippy::too_many_arguments)]
pub fn compute_delta(
    mesh: &RadialMesh,
    a: &PotentialProfile,
    b_plus: &PotentialProfile,
    f: &Nonlinearity,
    eps: f64,
    window: &Window,
    w: &PotentialProfile,
    ladder: &Ladder,
) -> Result<DeltaReport> {
    let min_w = min_on_window(w, mesh, window)?;
    let opts = SolverOptions { tol: 1e-11, ..Default::default() };
    let mut sup_per_rung = Vec::new();
    let mut radii = Vec::new();
    for m in ladder.meshes(mesh)? {
        let aq = sum_sampled(&m, a, w, window)?;
        let bq = b_plus.on_mesh(&m)?;
        let z = dirichlet_solve_detailed(&m, &aq, &bq, f, BoundaryData::uniform(eps), &opts, None)?;
        sup_per_rung.push(z.solution.max());
        radii.push(m.outer_radius());
    }
    let c = sup_per_rung.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p = mesh.p();
    Ok(DeltaReport { delta: min_w * c.powf(p - 1.0) / f.eval(c), c_lambda: c, min_w, radii, sup_per_rung })
}

#[derive(Debug, Clone)]
pub struct MonotoneOptions {
    /// Weighted spectral-gap weight; defaults to [`hardy_margin`].
    pub w: Option<PotentialProfile>,
    pub ladder: Ladder,
    /// Use this value of `C_Lambda(eps)` instead of running the ladder.
    pub c_lambda: Option<f64>,
    /// Stop when `||phi_n - phi_{n-1}||_inf < tol ||phi_0||_inf`.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: SolverOptions,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        MonotoneOptions {
            w: None,
            ladder: Ladder::default(),
            c_lambda: None,
            tol: 1e-8,
            max_iter: 200,
            solver: SolverOptions { tol: 1e-11, max_iter: 200, check_coercivity: false },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Bounds {
    /// `min_Lambda phi_inf`.
    pub lower: f64,
    /// `C_Lambda(eps)`.
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub solution: DiscreteFunction,
    pub bounds: Bounds,
    pub delta: f64,
    pub epsilon: f64,
    /// `||phi_n||_inf` for `n = 0, 1, ...`.
    pub iteration_trace: Vec<f64>,
    /// `||phi_n - phi_{n-1}||_inf`.
    pub step_trace: Vec<f64>,
    pub iterations: usize,
    /// Scaled weak residual of the limit for the full equation.
    pub residual: f64,
    pub domain_sequence: Vec<f64>,
    pub phi_inf: DiscreteFunction,
    pub phi_0: DiscreteFunction,
}

/// Default `W`: the constant `min (chi - a)_+` over the closed window. It
/// keeps `a + W 1_Lambda <= chi` without touching `chi` on a whole region,
/// so `phi_0` stays bounded near the origin.
pub fn hardy_margin(mesh: &RadialMesh, a: &PotentialProfile, window: &Window) -> Result<PotentialProfile> {
    let model =
        mesh.model().ok_or_else(|| Error::InvalidInput("no model attached to the mesh; pass W explicitly".into()))?;
    let margin = PotentialProfile::hardy(model, 1.0).plus(a.clone().scaled(-1.0)).positive_part();
    Ok(PotentialProfile::Constant(min_on_window(&margin, mesh, window)?))
}

/// The iteration `(P_n)` with `V_n = a + b_- F(phi_{n-1}) / phi_{n-1}^{p-1}`
/// started from `phi_0`, bracketed below by `phi_inf`.
pub fn monotone_iteration(
    mesh: &RadialMesh,
    coeffs: &Coefficients,
    f: &Nonlinearity,
    eps: f64,
    window: &Window,
    opts: &MonotoneOptions,
) -> Result<SolveReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("boundary value must be positive, got {eps}")));
    }
    let p = mesh.p();
    f.check(p)?;
    if !coeffs.b_minus_supported_in(mesh, window)? {
        return Err(Error::InvalidInput("b_- must vanish outside the window".into()));
    }
    let w = match &opts.w {
        Some(w) => w.clone(),
        None => hardy_margin(mesh, &coeffs.a, window)?,
    };
    let b_plus = coeffs.b_plus();
    let (c_lambda, delta, radii) = match opts.c_lambda {
        Some(c) => {
            let min_w = min_on_window(&w, mesh, window)?;
            (c, min_w * c.powf(p - 1.0) / f.eval(c), opts.ladder.radii(mesh))
        }
        None => {
            let d = compute_delta(mesh, &coeffs.a, &b_plus, f, eps, window, &w, &opts.ladder)?;
            (d.c_lambda, d.delta, d.radii)
        }
    };
    let bmq = coeffs.b_minus().on_mesh(mesh)?;
    let bm_max = bmq.iter().chain(&coeffs.b_minus().on_nodes(mesh)?).cloned().fold(0.0, f64::max);
    if bm_max > delta {
        return Err(Error::DeltaViolated { b_minus: bm_max, delta });
    }

    let aq = coeffs.a.on_mesh(mesh)?;
    let bpq = b_plus.on_mesh(mesh)?;
    let v0 = sum_sampled(mesh, &coeffs.a, &w, window)?;
    ensure_coercive(mesh, &aq)?;
    ensure_coercive(mesh, &v0)?;
    let bd = BoundaryData::uniform(eps);
    let phi_inf = dirichlet_solve_detailed(mesh, &aq, &bpq, f, bd, &opts.solver, None)?.solution;
    let phi_0 = dirichlet_solve_detailed(mesh, &v0, &bpq, f, bd, &opts.solver, None)?.solution;

    let norm0 = phi_0.max().abs();
    let slack = 1e-8 * norm0;
    let mut trace = vec![norm0];
    let mut steps = Vec::new();
    let mut prev = phi_0.values.clone();
    let mut it = 0;
    let b_minus_vanishes = bmq.iter().all(|x| *x == 0.0);
    loop {
        if it >= opts.max_iter {
            return Err(Error::NonConvergence { iterations: it, residual: *steps.last().unwrap_or(&f64::NAN) });
        }
        it += 1;
        let pq = mesh.at_quad(&prev);
        let vn: Vec<f64> = aq
            .iter()
            .zip(&bmq)
            .zip(&pq)
            .map(|((a, b), t)| if *b == 0.0 || !(*t > 0.0) { *a } else { a + b * f.ratio(*t, p) })
            .collect();
        let next = dirichlet_solve_detailed(mesh, &vn, &bpq, f, bd, &opts.solver, Some(&prev))?.solution.values;
        if let Some(i) = (0..next.len()).find(|&i| next[i] > prev[i] + slack) {
            return Err(Error::MonotonicityViolated(format!(
                "phi_{it} exceeds phi_{} at r = {} by {:e}",
                it - 1,
                mesh.nodes()[i],
                next[i] - prev[i]
            )));
        }
        if let Some(i) = (0..next.len()).find(|&i| next[i] < phi_inf.values[i] - slack) {
            return Err(Error::MonotonicityViolated(format!(
                "phi_{it} falls below phi_inf at r = {} by {:e}",
                mesh.nodes()[i],
                phi_inf.values[i] - next[i]
            )));
        }
        let step = next.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        trace.push(next.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        steps.push(step);
        prev = next;
        // Without b_- every V_n equals a, so phi_1 is already the limit.
        if b_minus_vanishes || step < opts.tol * norm0 {
            break;
        }
    }
    let bq = coeffs.b.on_mesh(mesh)?;
    let residual = Problem { mesh, aq: &aq, bq: &bq, f }.scaled_residual(&prev)?;
    Ok(SolveReport {
        solution: mesh.function(prev)?,
        bounds: Bounds { lower: window.min_of(mesh, &phi_inf.values), upper: c_lambda },
        delta,
        epsilon: eps,
        iteration_trace: trace,
        step_trace: steps,
        iterations: it,
        residual,
        domain_sequence: radii,
        phi_inf,
        phi_0,
    })
}

/// Solutions `u_0, u_1, ...` for boundary values `eps_0 > eps_1 > ...`
/// chosen so that `C_Lambda(eps_k) < min_Lambda u_{k-1}`, which forces the
/// solutions apart.
pub fn multi_solution_sequence(
    mesh: &RadialMesh,
    coeffs: &Coefficients,
    f: &Nonlinearity,
    eps0: f64,
    window: &Window,
    k_max: usize,
    opts: &MonotoneOptions,
) -> Result<Vec<SolveReport>> {
    for m in opts.ladder.meshes(mesh)? {
        if !coeffs.a_nonpositive_outside(&m, window)? {
            return Err(Error::InvalidInput("a must be nonpositive outside the window".into()));
        }
    }
    let wts = mesh.quad_weights();
    for (name, prof) in [("a", &coeffs.a), ("b", &coeffs.b)] {
        let s: f64 = prof.on_mesh(mesh)?.iter().zip(wts).map(|(v, w)| v.abs() * w).sum();
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!("{name} is not integrable on the mesh")));
        }
    }
    let w = match &opts.w {
        Some(w) => w.clone(),
        None => hardy_margin(mesh, &coeffs.a, window)?,
    };
    let opts = MonotoneOptions { w: Some(w.clone()), ..opts.clone() };
    let b_plus = coeffs.b_plus();
    let mut out: Vec<SolveReport> = Vec::new();
    let mut eps = eps0;
    while out.len() < k_max {
        let mut c = None;
        if let Some(last) = out.last() {
            let target = window.min_of(mesh, &last.solution.values);
            let mut halvings = 0;
            loop {
                eps *= 0.5;
                halvings += 1;
                if halvings > 200 || eps < f64::MIN_POSITIVE * 1e10 {
                    return Err(Error::LadderStall(format!(
                        "no eps with C_Lambda(eps) below {target:e} after {halvings} halvings"
                    )));
                }
                let d = compute_delta(mesh, &coeffs.a, &b_plus, f, eps, window, &w, &opts.ladder)?;
                if d.c_lambda < target {
                    c = Some(d.c_lambda);
                    break;
                }
            }
        }
        let run = MonotoneOptions { c_lambda: c, ..opts.clone() };
        out.push(monotone_iteration(mesh, coeffs, f, eps, window, &run)?);
    }
    Ok(out)
}
