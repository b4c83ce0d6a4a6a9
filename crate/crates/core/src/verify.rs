//! Golden values and seeded properties behind `qvlab verify`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::capacity::{
    capacitor_solve, capacity_ladder, classify_criticality, global_capacity, Criticality, SupersolutionDatum,
};
use crate::error::Result;
use crate::geometry::ModelManifold;
use crate::hardy::{chi_general, chi_limit, log_grid, zeta_check};
use crate::mesh::{bump, lagrangian_sampled, picone, qv_energy, PotentialProfile, RadialMesh};
use crate::solver::{
    compute_delta, dirichlet_solve, hardy_margin, monotone_iteration, multi_solution_sequence, obstacle_solve,
    pasting_min_check, uniform_lower_bound_check, weak_residual, BoundaryData, Coefficients, Ladder, MonotoneOptions,
    Nonlinearity, SolverOptions, Window, TOL_PASTE,
};
use crate::spectral::fundamental_tone;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn(u64) -> Result<(bool, String)>;

const CHECKS: &[(u32, &str, Check, Option<f64>)] = &[
    (1, "hyperbolic Hardy closed forms", hardy_closed_forms, Some(1.0)),
    (2, "Hardy limits and lower bound", hardy_limits, None),
    (3, "Euclidean Hardy constant", euclidean_constant, None),
    (4, "zeta positivity and asymptotics", zeta_positivity, None),
    (5, "exact hyperbolic solutions", exact_solutions, Some(10.0)),
    (6, "capacities and criticality", capacities, None),
    (7, "fundamental tones", tones, None),
    (8, "Picone and Lagrangian", picone_lagrangian, None),
    (9, "monotone pipeline", monotone_pipeline, None),
    (10, "multi-solution sequence", multi_solution, Some(60.0)),
    (11, "obstacle and pasting", obstacle_pasting, None),
];

/// Runs every check; a check that errors counts as failed.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(id, name, f, limit)| {
            let t = Instant::now();
            let out = f(seed);
            let seconds = t.elapsed().as_secs_f64();
            let (mut passed, mut detail) = match out {
                Ok(v) => v,
                Err(e) => (false, format!("{}: {e}", e.name())),
            };
            if let Some(l) = limit {
                if seconds > l {
                    passed = false;
                    detail.push_str(&format!("; took {seconds:.2}s > {l}s"));
                }
            }
            CheckResult { id, name, passed, detail, seconds }
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn hardy_closed_forms(_: u64) -> Result<(bool, String)> {
    let h3 = ModelManifold::hyperbolic(3, 2.0, 1.0)?;
    let h2 = ModelManifold::hyperbolic(2, 2.0, 1.0)?;
    let (mut e3, mut e2) = (0.0f64, 0.0f64);
    for r in log_grid(0.05, 20.0, 50) {
        e3 = e3.max(rel(chi_general(&h3, r)?, (1.0 - (-2.0 * r).exp()).powi(-2)));
        let chi1 = 0.25 * (r.sinh() * ((r.exp() + 1.0) / (r.exp() - 1.0)).ln()).powi(-2);
        e2 = e2.max(rel(chi_general(&h2, r)?, chi1));
    }
    Ok((e3 <= 1e-6 && e2 <= 1e-6, format!("max rel err H3 {e3:.2e}, H2 {e2:.2e}")))
}

fn hardy_limits(_: u64) -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst_gap = 0.0f64;
    let mut min_margin = f64::INFINITY;
    for kappa in [0.5, 1.0, 2.0] {
        for alpha in [1usize, 2, 3] {
            let mm = ModelManifold::hyperbolic(alpha + 1, 2.0, kappa)?;
            let lim = chi_limit(2.0, alpha as f64, kappa);
            for r in log_grid(1e-3 / kappa, 50.0 / kappa, 200) {
                let c = chi_general(&mm, r)?;
                min_margin = min_margin.min((c - lim) / lim);
                ok &= c >= lim * (1.0 - 1e-12);
            }
            let gap = (chi_general(&mm, 50.0 / kappa)? - lim).abs();
            worst_gap = worst_gap.max(gap);
            ok &= gap <= 1e-3;
        }
    }
    Ok((ok, format!("min (chi - limit)/limit {min_margin:.2e}, worst gap at r = 50/kappa {worst_gap:.2e}")))
}

fn euclidean_constant(_: u64) -> Result<(bool, String)> {
    let r = 1e-3;
    let mut worst = 0.0f64;
    for (m, p) in [(3usize, 2.0), (4, 2.0), (5, 3.0)] {
        let mm = ModelManifold::flat(m, p)?;
        let target = ((m as f64 - p) / p).powf(p);
        worst = worst.max(rel(chi_general(&mm, r)? * r.powf(p), target));
    }
    Ok((worst <= 1e-4, format!("max rel err {worst:.2e}")))
}

fn zeta_positivity(_: u64) -> Result<(bool, String)> {
    let mut ok = true;
    let mut min_z = f64::INFINITY;
    let mut worst = 0.0f64;
    for m in 2..=6 {
        for kappa in [0.5, 1.0, 2.0] {
            let rep = zeta_check(m, kappa, &log_grid(1e-12 / kappa, 50.0 / kappa, 400))?;
            min_z = min_z.min(rep.min_zeta);
            let e0 = (rep.ratio_at_origin - 1.0).abs();
            let e1 = (rep.ratio_at_infinity.unwrap_or(f64::NAN) - 1.0).abs();
            worst = worst.max(e0).max(e1);
            ok &= rep.positive && e0 <= 0.01 && e1 <= 0.01;
        }
    }
    Ok((ok, format!("min zeta {min_z:.3e}, worst endpoint ratio error {worst:.2e}")))
}

/// `u_tau` solves `Delta u + 2u - u^3 = 0` on `H^4`.
pub fn u_tau(tau: f64, r: f64) -> f64 {
    let m = 4.0;
    (m * (m - 2.0) * tau * tau).powf((m - 2.0) / 4.0)
        * (2.0 * ((tau * tau - 1.0) * (r / 2.0).cosh().powi(2) + 1.0)).powf(-(m - 2.0) / 2.0)
}

fn exact_solutions(_: u64) -> Result<(bool, String)> {
    let mm = ModelManifold::hyperbolic(4, 2.0, 1.0)?;
    let mesh = RadialMesh::ball(&mm, 8.0, 4000)?;
    let (a, b, f) = (PotentialProfile::Constant(2.0), PotentialProfile::Constant(1.0), Nonlinearity::power(3.0));
    let mut res = Vec::new();
    let mut errs = Vec::new();
    for tau in [1.0, 2.0] {
        let exact = mesh.interpolate(|r| u_tau(tau, r));
        res.push(weak_residual(&mesh, &a, &b, &f, &exact)?);
        let bd = BoundaryData::uniform(u_tau(tau, 8.0));
        let z =
            dirichlet_solve(&mesh, &a, &b, &f, bd, &SolverOptions { check_coercivity: false, ..Default::default() })?;
        errs.push(z.values.iter().zip(&exact.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    let ok = res.iter().all(|r| *r <= 1e-6) && errs[0] <= 1e-4;
    Ok((
        ok,
        format!("weak residuals {:.2e} {:.2e}; recovery errors u1 {:.2e} u2 {:.2e}", res[0], res[1], errs[0], errs[1]),
    ))
}

fn capacities(_: u64) -> Result<(bool, String)> {
    let g = SupersolutionDatum::constant(1.0);
    let zero = PotentialProfile::zero();
    let r3 = ModelManifold::flat(3, 2.0)?;
    let c = capacitor_solve(&RadialMesh::annulus(&r3, 1.0, 2.0, 400)?, &zero, &g)?;
    let e_val = rel(c.value, 4.0 * PI);
    let e_flux = rel(c.flux_value, c.value);
    let gc = global_capacity(&capacity_ladder(&r3, 1.0, 2.0, 8, 100)?, &zero, &g)?;
    let e_lim = rel(gc.estimate, 2.0 * PI);
    let r2 = ModelManifold::flat(2, 2.0)?;
    let l2 = capacity_ladder(&r2, 1.0, 2.0, 8, 100)?;
    let c2 = classify_criticality(&l2, &zero, &g)?;
    let e_log = c2.radii.iter().zip(&c2.values).map(|(r, v)| rel(*v, PI / r.ln())).fold(0.0, f64::max);
    let c3 = classify_criticality(&capacity_ladder(&r3, 1.0, 2.0, 8, 100)?, &zero, &g)?;
    let ok = e_val <= 5e-3
        && e_flux <= 1e-3
        && gc.monotone
        && e_lim <= 1e-2
        && e_log <= 2e-2
        && c2.class == Criticality::Critical
        && c3.class == Criticality::Subcritical;
    Ok((
        ok,
        format!(
            "4pi err {e_val:.2e}, flux err {e_flux:.2e}, 2pi limit err {e_lim:.2e}, pi/ln R err {e_log:.2e}, m=2 {:?}, m=3 {:?}",
            c2.class, c3.class
        ),
    ))
}

fn tones(_: u64) -> Result<(bool, String)> {
    let mm = ModelManifold::flat(3, 2.0)?;
    let t1 = fundamental_tone(&RadialMesh::annulus(&mm, 1.0, 2.0, 2000)?, &PotentialProfile::zero())?;
    let t2 = fundamental_tone(&RadialMesh::ball(&mm, PI, 2000)?, &PotentialProfile::zero())?;
    let (e1, e2) = (rel(t1.lambda, PI * PI), rel(t2.lambda, 1.0));
    Ok((
        e1 <= 1e-3 && e2 <= 1e-3,
        format!("annulus {:.8} (err {e1:.2e}), ball {:.8} (err {e2:.2e})", t1.lambda, t2.lambda),
    ))
}

fn random_model(rng: &mut ChaCha8Rng) -> Result<ModelManifold> {
    let m = rng.gen_range(2..=5);
    let p = rng.gen_range(1.5..3.0);
    if rng.gen_bool(0.5) {
        ModelManifold::flat(m, p)
    } else {
        ModelManifold::hyperbolic(m, p, rng.gen_range(0.5..2.0))
    }
}

/// `int |w'|^p dmu`.
fn p_energy(mesh: &RadialMesh, w: &crate::mesh::DiscreteFunction) -> Result<f64> {
    Ok(mesh.p() * qv_energy(mesh, &PotentialProfile::zero(), w)?)
}

fn picone_lagrangian(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min_i, mut max_prop) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..200 {
        let mm = random_model(&mut rng)?;
        let mesh = RadialMesh::ball(&mm, rng.gen_range(1.0..3.0), rng.gen_range(20..120))?;
        let n = mesh.n_nodes();
        let w = mesh.function((0..n).map(|_| rng.gen_range(0.1..2.0)).collect())?;
        let z = mesh.function((0..n).map(|_| rng.gen_range(0.1..2.0)).collect())?;
        min_i = min_i.min(picone(&mesh, &w, &z)?);
        let c = rng.gen_range(0.2..5.0);
        let scale = p_energy(&mesh, &w)?;
        max_prop = max_prop.max(picone(&mesh, &w, &w.map(|v| c * v))?.abs() / scale);
    }
    // g = 1 + r^2 solves Q'_V(g) = 0 for V = -Delta_p g / g^{p-1} on flat space.
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.gen_range(2..=5);
        let p: f64 = rng.gen_range(1.5..3.0);
        let mm = ModelManifold::flat(m, p)?;
        let radius = rng.gen_range(1.5..3.0);
        let mesh = RadialMesh::ball(&mm, radius, 2000)?;
        let k = (m as f64 + p - 2.0) * 2f64.powf(p - 1.0);
        let v = PotentialProfile::function(move |r: f64| -k * r.powf(p - 2.0) / (1.0 + r * r).powf(p - 1.0));
        let centers: Vec<(f64, f64, f64)> =
            (0..3).map(|_| (rng.gen_range(0.0..radius), rng.gen_range(0.3..1.0), rng.gen_range(0.2..2.0))).collect();
        let phi = mesh.interpolate(|r| {
            let s: f64 = centers.iter().map(|&(c, w, h)| bump(r, c, w, h)).sum();
            s * (1.0 - (r / radius).powi(2))
        });
        let gq: Vec<f64> = mesh.quad_radii().iter().map(|r| 1.0 + r * r).collect();
        let dgq: Vec<f64> = mesh.quad_radii().iter().map(|r| 2.0 * r).collect();
        let lhs = p * qv_energy(&mesh, &v, &phi)?;
        let rhs = lagrangian_sampled(&mesh, &phi, &gq, &dgq)?;
        worst = worst.max(rel(lhs, rhs));
    }
    let ok = min_i >= -1e-10 && max_prop <= 1e-10 && worst <= 1e-6;
    Ok((ok, format!("min I(w,z) {min_i:.2e}, max |I(w,cw)| / |w'|^p {max_prop:.2e}, Lagrangian rel err {worst:.2e}")))
}

/// A scenario where a positive solution is known to exist: `a = theta chi` on a
/// flat or hyperbolic ball, `b = 1 - bump` with a small negative dip inside
/// the window, `F(t) = t^sigma`.
pub struct MonotoneScenario {
    pub mesh: RadialMesh,
    pub coeffs: Coefficients,
    pub f: Nonlinearity,
    pub window: Window,
    pub eps: f64,
}

pub fn monotone_scenario(rng: &mut ChaCha8Rng) -> Result<MonotoneScenario> {
    let mm = if rng.gen_bool(0.5) { ModelManifold::flat(3, 2.0)? } else { ModelManifold::hyperbolic(3, 2.0, 1.0)? };
    let radius = rng.gen_range(3.0..5.0);
    let mesh = RadialMesh::ball(&mm, radius, 300)?;
    let window = Window::new(0.0, 2.0)?;
    let theta = rng.gen_range(0.2..0.6);
    let a = PotentialProfile::hardy(&mm, theta);
    let f = Nonlinearity::power(rng.gen_range(2.0..4.0));
    let eps = rng.gen_range(0.5..1.5);
    let (center, width) = (rng.gen_range(0.6..1.4), 0.5);
    let b_at = |h: f64| PotentialProfile::Constant(1.0).plus(PotentialProfile::Bump { center, width, height: -h });
    let w = hardy_margin(&mesh, &a, &window)?;
    let d = compute_delta(&mesh, &a, &b_at(1.0).positive_part(), &f, eps, &window, &w, &Ladder::default())?;
    let coeffs = Coefficients::new(a, b_at(1.0 + rng.gen_range(0.2..0.6) * d.delta));
    Ok(MonotoneScenario { mesh, coeffs, f, window, eps })
}

fn monotone_pipeline(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let mut ok = true;
    let mut max_it = 0;
    let mut worst_bracket = 0.0f64;
    for _ in 0..10 {
        let s = monotone_scenario(&mut rng)?;
        let rep = monotone_iteration(&s.mesh, &s.coeffs, &s.f, s.eps, &s.window, &MonotoneOptions::default())?;
        max_it = max_it.max(rep.iterations);
        ok &= rep.iterations <= 200 && rep.iteration_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        let scale = rep.phi_0.max();
        for ((u, lo), hi) in rep.solution.values.iter().zip(&rep.phi_inf.values).zip(&rep.phi_0.values) {
            worst_bracket = worst_bracket.max((lo - u).max(u - hi) / scale);
        }
    }
    ok &= worst_bracket <= 1e-8;
    // a comparable to b_+ at infinity: both equal to 2 on H^4.
    let mm = ModelManifold::hyperbolic(4, 2.0, 1.0)?;
    let mesh = RadialMesh::ball(&mm, 4.0, 200)?;
    let two = PotentialProfile::Constant(2.0);
    let lb = uniform_lower_bound_check(
        &mesh,
        &two,
        &two,
        &Nonlinearity::power(3.0),
        0.5,
        &Window::new(0.0, 2.0)?,
        &Ladder::default(),
        1e-3,
    )?;
    ok &= lb.stable && lb.above_floor;
    Ok((
        ok,
        format!(
            "max iterations {max_it}, bracket violation {worst_bracket:.2e}, ladder inf {:.4} (change {:.2e})",
            lb.running_min.last().copied().unwrap_or(f64::NAN),
            lb.relative_change
        ),
    ))
}

fn multi_solution(_: u64) -> Result<(bool, String)> {
    let mm = ModelManifold::flat(3, 2.0)?;
    let mesh = RadialMesh::ball(&mm, 4.0, 300)?;
    let window = Window::new(0.0, 2.0)?;
    let a = PotentialProfile::hardy(&mm, 0.5).restricted(0.0, 2.0);
    let b = PotentialProfile::Bump { center: 2.5, width: 1.0, height: 1.0 }.plus(PotentialProfile::Bump {
        center: 1.0,
        width: 0.5,
        height: -1e-4,
    });
    let coeffs = Coefficients::new(a, b);
    let runs = multi_solution_sequence(
        &mesh,
        &coeffs,
        &Nonlinearity::power(3.0),
        1.0,
        &window,
        3,
        &MonotoneOptions::default(),
    )?;
    let sups: Vec<f64> = runs.iter().map(|r| r.solution.max()).collect();
    let ok = runs.len() == 3
        && sups.windows(2).all(|w| w[1] < w[0])
        && runs.iter().all(|r| r.solution.max() <= r.bounds.upper * (1.0 + 1e-9));
    let bounds: Vec<f64> = runs.iter().map(|r| r.bounds.upper).collect();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ");
    Ok((ok, format!("sup norms {}, C_Lambda {}", fmt(&sups), fmt(&bounds))))
}

fn obstacle_pasting(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51ed);
    let mut worst_comp = 0.0f64;
    for _ in 0..10 {
        let mm = random_model(&mut rng)?;
        let mesh = RadialMesh::ball(&mm, rng.gen_range(1.0..3.0), rng.gen_range(50..200))?;
        let v = PotentialProfile::Constant(-rng.gen_range(0.0..1.0));
        let radius = mesh.outer_radius();
        let (c, w, h) = (rng.gen_range(0.2..0.6) * radius, rng.gen_range(0.2..0.4) * radius, rng.gen_range(1.2..3.0));
        let psi = mesh.interpolate(|r| bump(r, c, w, h));
        let res = obstacle_solve(&mesh, &v, &psi, &mesh.constant(1.0))?;
        worst_comp = worst_comp.max(res.complementarity);
    }
    // Truncated Green kernel: min(discrete harmonic G, c) on an annulus.
    let mm = ModelManifold::flat(3, 2.0)?;
    let mesh = RadialMesh::annulus(&mm, 0.1, 4.0, 400)?;
    let zero = PotentialProfile::zero();
    let opts = SolverOptions::default();
    let f = Nonlinearity::power(2.0);
    let green = dirichlet_solve(&mesh, &zero, &zero, &f, BoundaryData { inner: 10.0, outer: 0.25 }, &opts)?;
    let mut pasting_ok = pasting_min_check(&mesh, &zero, &green, &mesh.constant(2.0), TOL_PASTE)?.passes;
    let mut worst_paste = f64::INFINITY;
    for _ in 0..10 {
        let mm = random_model(&mut rng)?;
        let mesh = RadialMesh::annulus(&mm, rng.gen_range(0.2..1.0), rng.gen_range(2.0..4.0), rng.gen_range(100..300))?;
        let v = PotentialProfile::Constant(-rng.gen_range(0.0..1.0));
        let mut sols = Vec::new();
        for _ in 0..2 {
            let bd = BoundaryData { inner: rng.gen_range(0.2..3.0), outer: rng.gen_range(0.2..3.0) };
            sols.push(dirichlet_solve(&mesh, &v, &zero, &f, bd, &opts)?);
        }
        let rep = pasting_min_check(&mesh, &v, &sols[0], &sols[1], TOL_PASTE)?;
        worst_paste = worst_paste.min(rep.min_scaled_residual);
        pasting_ok &= rep.passes;
    }
    let ok = worst_comp <= 1e-8 && pasting_ok;
    Ok((ok, format!("worst complementarity {worst_comp:.2e}, min pasted residual {worst_paste:.2e}")))
}
