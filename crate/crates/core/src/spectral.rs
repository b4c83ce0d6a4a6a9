//! Fundamental tones `lambda_V(Omega)` on radial meshes, the
//! Allegretto-Piepenbrink consistency check, and an upper estimate for the
//! Yamabe invariant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm2, SymTridiag};
use crate::mesh::{bump, energy_sampled, residual_sampled, spow, DiscreteFunction, PotentialProfile, RadialMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToneMethod {
    GeneralizedEigen,
    RayleighDescent,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToneResult {
    pub lambda: f64,
    /// Non-negative, normalized in `L^p(omega)`.
    pub eigenfunction: DiscreteFunction,
    pub method: ToneMethod,
    pub iterations: usize,
    /// p = 2: `||(A - lambda M) phi|| / ||A phi||`. Otherwise the scaled
    /// stationarity residual of the Rayleigh quotient.
    pub residual: f64,
}

/// Smallest value of `p Q_V(phi) / ||phi||_p^p` over the mesh's function
/// space with the essential boundary conditions.
pub fn fundamental_tone(mesh: &RadialMesh, v: &PotentialProfile) -> Result<ToneResult> {
    let vq = v.on_mesh(mesh)?;
    fundamental_tone_sampled(mesh, &vq)
}

/// [`fundamental_tone`] with the potential already sampled at the
/// quadrature points.
pub fn fundamental_tone_sampled(mesh: &RadialMesh, vq: &[f64]) -> Result<ToneResult> {
    let (lo, hi) = mesh.free_range();
    if hi <= lo {
        return Err(Error::NoInteriorDof);
    }
    if let Some(k) = vq.iter().position(|v| !v.is_finite()) {
        return Err(Error::SingularPotential(mesh.quad_radii()[k]));
    }
    if mesh.p() == 2.0 {
        linear_tone(mesh, vq)
    } else {
        descent_tone(mesh, vq)
    }
}

struct Pencil {
    a: SymTridiag,
    m: SymTridiag,
    k: SymTridiag,
    lo: usize,
    hi: usize,
}

fn pencil(mesh: &RadialMesh, vq: &[f64]) -> Pencil {
    let (lo, hi) = mesh.free_range();
    let k = mesh.stiffness(None);
    let mv = mesh.mass(Some(vq));
    let a = k.add_scaled(-1.0, &mv).block(lo, hi);
    Pencil { a, m: mesh.mass(None).block(lo, hi), k: k.block(lo, hi), lo, hi }
}

/// Smallest generalized eigenvalue by inertia bisection, then the
/// eigenvector by shifted inverse iteration.
fn smallest_eigenpair(pc: &Pencil) -> Result<(f64, Vec<f64>, usize)> {
    let (a, m) = (&pc.a, &pc.m);
    let n = a.len();
    let ones = vec![1.0; n];
    let rq = a.quad_form(&ones) / m.quad_form(&ones);
    let scale = rq.abs().max(a.diag.iter().zip(&m.diag).map(|(x, y)| (x / y).abs()).fold(0.0, f64::max) * 1e-12);
    let mut hi = rq + 1e-8 * scale.max(1e-300);
    let mut step = scale.max(1.0);
    while a.count_below(m, hi) == 0 {
        hi += step;
        step *= 2.0;
    }
    let mut lo = hi - step;
    while a.count_below(m, lo) > 0 {
        step *= 2.0;
        lo = hi - step;
    }
    let mut iters = 0;
    while hi - lo > 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) && iters < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if a.count_below(m, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    // Shift just below the eigenvalue so that A - sigma M stays positive
    // definite and the sweep needs no pivoting.
    let gap = (hi - lo).max(1e-13 * lo.abs().max(1e-300));
    let sigma = lo - gap;
    let shifted = a.add_scaled(-sigma, m);
    let mut x = ones;
    for _ in 0..60 {
        iters += 1;
        let rhs = m.mul_vec(&x);
        let y = shifted.solve(&rhs).ok_or(Error::NonConvergence { iterations: iters, residual: f64::NAN })?;
        let ny = m.quad_form(&y).sqrt();
        let y: Vec<f64> = y.iter().map(|v| v / ny).collect();
        let diff = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        x = y;
        if diff < 1e-15 {
            break;
        }
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let lambda = a.quad_form(&x) / m.quad_form(&x);
    Ok((lambda, x, iters))
}

fn linear_tone(mesh: &RadialMesh, vq: &[f64]) -> Result<ToneResult> {
    let pc = pencil(mesh, vq);
    let (lambda, x, iterations) = smallest_eigenpair(&pc)?;
    let ax = pc.a.mul_vec(&x);
    let mx = pc.m.mul_vec(&x);
    let r: Vec<f64> = ax.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
    let residual = norm2(&r) / norm2(&pc.k.mul_vec(&x)).max(f64::MIN_POSITIVE);
    let mut values = vec![0.0; mesh.n_nodes()];
    for (i, v) in x.iter().enumerate() {
        values[pc.lo + i] = v.max(0.0);
    }
    debug_assert_eq!(pc.hi - pc.lo, x.len());
    Ok(ToneResult {
        lambda,
        eigenfunction: mesh.function(values)?,
        method: ToneMethod::GeneralizedEigen,
        iterations,
        residual,
    })
}

/// Rayleigh quotient `N/D` and its gradient on the free nodes.
fn rayleigh(mesh: &RadialMesh, vq: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    let p = mesh.p();
    let num = p * energy_sampled(mesh, vq, x)?;
    let den = mesh.lp_norm_pow(x);
    let (res, mag) = residual_sampled(mesh, vq, x)?;
    let lp = mesh.load(&mesh.at_quad(x).iter().map(|v| spow(*v, p - 1.0)).collect::<Vec<_>>());
    // d/dx (N/D) with dN = p res and dD = p lp.
    let rq = num / den;
    let grad: Vec<f64> = res.iter().zip(&lp).map(|(r, l)| p * (r - rq * l) / den).collect();
    let scale = mag.iter().fold(0.0f64, |a, b| a.max(*b)).max(f64::MIN_POSITIVE);
    let (lo, hi) = mesh.free_range();
    let stat = grad[lo..hi].iter().fold(0.0f64, |a, b| a.max(b.abs())) * den / (p * scale);
    Ok((rq, grad, stat))
}

fn normalize(mesh: &RadialMesh, x: &mut [f64]) {
    let n = mesh.lp_norm_pow(x).powf(1.0 / mesh.p());
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Metric for the descent: regularized Hessian of `\int |x'|^p` plus mass.
fn preconditioner(mesh: &RadialMesh, x: &[f64]) -> SymTridiag {
    let p = mesh.p();
    let s = mesh.slopes(x);
    let typical = s.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let eta2 = (1e-3 * typical).powi(2);
    let coeff: Vec<f64> = s.iter().map(|d| (p - 1.0) * (d * d + eta2).powf(0.5 * (p - 2.0))).collect();
    let k = mesh.stiffness(Some(&coeff));
    let m = mesh.mass(None);
    let kd: f64 = k.diag.iter().sum();
    let md: f64 = m.diag.iter().sum();
    k.add_scaled(1e-3 * kd / md, &m)
}

fn descend(mesh: &RadialMesh, vq: &[f64], seed: Vec<f64>, max_iter: usize) -> Result<(f64, Vec<f64>, usize, f64)> {
    let (lo, hi) = mesh.free_range();
    let mut x = seed;
    x.iter_mut().enumerate().for_each(|(i, v)| *v = if i >= lo && i < hi { v.max(0.0) } else { 0.0 });
    normalize(mesh, &mut x);
    let (mut rq, mut grad, mut stat) = rayleigh(mesh, vq, &x)?;
    let mut it = 0;
    let mut stalls = 0;
    while it < max_iter {
        it += 1;
        let pre = preconditioner(mesh, &x).block(lo, hi);
        let g = &grad[lo..hi];
        let d = match pre.solve(g) {
            Some(d) => d,
            None => g.to_vec(),
        };
        let slope: f64 = d.iter().zip(g).map(|(a, b)| a * b).sum();
        if !(slope > 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut y = x.clone();
            for (k, i) in (lo..hi).enumerate() {
                y[i] = (x[i] - t * d[k]).max(0.0);
            }
            normalize(mesh, &mut y);
            let (r2, g2, s2) = rayleigh(mesh, vq, &y)?;
            if r2 <= rq - 1e-4 * t * slope || (r2 <= rq && t < 1e-6) {
                accepted = Some((r2, g2, s2, y));
                break;
            }
            t *= 0.5;
        }
        let Some((r2, g2, s2, y)) = accepted else { break };
        let change = (rq - r2).abs() / rq.abs().max(1e-300);
        x = y;
        rq = r2;
        grad = g2;
        stat = s2;
        if change < 1e-14 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        if stat < 1e-12 {
            break;
        }
    }
    Ok((rq, x, it, stat))
}

fn descent_tone(mesh: &RadialMesh, vq: &[f64]) -> Result<ToneResult> {
    let (lo, hi) = mesh.free_range();
    let nodes = mesh.nodes();
    let (a, b) = (nodes[lo.min(nodes.len() - 1)], nodes[hi.max(1) - 1]);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a).max(mesh.min_spacing());
    let mut seeds = Vec::with_capacity(3);
    // First mode of the linear pencil on the same mesh.
    let (_, x2, _) = smallest_eigenpair(&pencil(mesh, vq))?;
    let mut s = vec![0.0; mesh.n_nodes()];
    for (k, v) in x2.iter().enumerate() {
        s[lo + k] = v.abs();
    }
    seeds.push(s);
    seeds.push(nodes.iter().map(|&r| bump(r, mid, half * 1.0001, 1.0) + 1e-3).collect());
    seeds.push(vec![1.0; mesh.n_nodes()]);
    let mut best: Option<(f64, Vec<f64>, usize, f64)> = None;
    let mut total = 0;
    for seed in seeds {
        let (rq, x, it, stat) = descend(mesh, vq, seed, 5000)?;
        total += it;
        if best.as_ref().is_none_or(|b| rq < b.0) {
            best = Some((rq, x, it, stat));
        }
    }
    let (lambda, x, _, stat) = best.unwrap();
    Ok(ToneResult {
        lambda,
        eigenfunction: mesh.function(x)?,
        method: ToneMethod::RayleighDescent,
        iterations: total,
        residual: stat,
    })
}

/// Which of the three equivalent positivity statements held on the mesh.
#[derive(Debug, Clone, Serialize)]
pub struct ApReport {
    pub tone: f64,
    pub tone_nonnegative: bool,
    /// The Dirichlet problem with boundary value 1 has a positive solution.
    pub positive_solution: bool,
    /// That solution is a discrete supersolution.
    pub supersolution: bool,
    pub coercivity_lost: bool,
    pub consistent: bool,
    pub notes: Vec<String>,
}

/// Numerical check of the equivalence between `lambda_V >= 0`, existence
/// of a positive solution and existence of a positive supersolution.
pub fn ap_consistency_check(mesh: &RadialMesh, v: &PotentialProfile) -> Result<ApReport> {
    let vq = v.on_mesh(mesh)?;
    let tone = fundamental_tone_sampled(mesh, &vq)?.lambda;
    let tol = 1e-9;
    let mut notes = Vec::new();
    let mut coercivity_lost = false;
    let solution = if mesh.p() == 2.0 {
        linear_dirichlet(mesh, &vq, 1.0)
    } else if tone > 0.0 {
        crate::solver::dirichlet_solve_sampled(
            mesh,
            &vq,
            &vec![0.0; vq.len()],
            &crate::solver::Nonlinearity::power(2.0),
            crate::solver::BoundaryData::uniform(1.0),
            &crate::solver::SolverOptions { check_coercivity: false, ..Default::default() },
        )
        .ok()
        .map(|d| d.values)
    } else {
        None
    };
    if tone <= 0.0 {
        coercivity_lost = true;
        notes.push(format!("fundamental tone {tone:.6e} is not positive"));
    }
    let positive_solution = solution.as_ref().is_some_and(|u| u.iter().all(|x| *x > 0.0));
    let supersolution = match &solution {
        Some(u) if positive_solution => {
            let (res, mag) = residual_sampled(mesh, &vq, u)?;
            let scale = mag.iter().fold(0.0f64, |a, b| a.max(*b)).max(f64::MIN_POSITIVE);
            let (lo, hi) = mesh.free_range();
            res[lo..hi].iter().all(|r| *r >= -tol * scale)
        }
        _ => false,
    };
    if solution.is_none() {
        notes.push("Dirichlet problem has no solution on this mesh".into());
    } else if !positive_solution {
        notes.push("Dirichlet solution changes sign".into());
    }
    // At the borderline the tone may be zero up to rounding.
    let tone_nonnegative = tone >= -1e-10 * tone.abs().max(1.0);
    let consistent = tone_nonnegative == positive_solution && positive_solution == supersolution;
    Ok(ApReport { tone, tone_nonnegative, positive_solution, supersolution, coercivity_lost, consistent, notes })
}

/// Solves `Q'_V(u) = 0` (p = 2) with value `c` on essential boundaries.
fn linear_dirichlet(mesh: &RadialMesh, vq: &[f64], c: f64) -> Option<Vec<f64>> {
    let (lo, hi) = mesh.free_range();
    let full = mesh.stiffness(None).add_scaled(-1.0, &mesh.mass(Some(vq)));
    let n = mesh.n_nodes();
    let mut u = vec![0.0; n];
    if lo == 1 {
        u[0] = c;
    }
    if hi == n - 1 {
        u[n - 1] = c;
    }
    let au = full.mul_vec(&u);
    let rhs: Vec<f64> = au[lo..hi].iter().map(|v| -v).collect();
    let x = full.block(lo, hi).solve(&rhs)?;
    u[lo..hi].copy_from_slice(&x);
    Some(u)
}

/// Radial test bumps for the Yamabe quotient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFamily {
    /// `(center, half-width)` of `(1 - ((r - c)/w)^2)^2_+`.
    pub bumps: Vec<(f64, f64)>,
}

impl TestFamily {
    /// Centered bumps of growing width plus off-center bumps.
    pub fn default_for(mesh: &RadialMesh) -> Self {
        let (a, b) = (mesh.inner_radius(), mesh.outer_radius());
        let len = b - a;
        let mut bumps = Vec::new();
        for k in 1..=8 {
            bumps.push((a, len * k as f64 / 8.0));
        }
        for k in 1..8 {
            for w in [0.125, 0.25] {
                let c = a + len * k as f64 / 8.0;
                if c - len * w >= a && c + len * w <= b {
                    bumps.push((c, len * w));
                }
            }
        }
        TestFamily { bumps }
    }
}

/// `min_phi \int (|phi'|^2 + s/c_m phi^2) / (\int phi^{2m/(m-2)})^{(m-2)/m}`
/// over the family, with `c_m = 4(m-1)/(m-2)`.
pub fn yamabe_invariant_upper_bound(
    mesh: &RadialMesh,
    s: &PotentialProfile,
    m: usize,
    family: &TestFamily,
) -> Result<f64> {
    if m < 3 {
        return Err(Error::DimensionTooLow(m));
    }
    if mesh.p() != 2.0 {
        return Err(Error::UnsupportedExponent(mesh.p()));
    }
    let mf = m as f64;
    let cm = 4.0 * (mf - 1.0) / (mf - 2.0);
    let crit = 2.0 * mf / (mf - 2.0);
    let sq = s.on_mesh(mesh)?;
    let vq: Vec<f64> = sq.iter().map(|x| -x / cm).collect();
    let mut best = f64::INFINITY;
    let inner_free = mesh.inner_boundary() == crate::mesh::BoundaryKind::Natural;
    for &(c, w) in &family.bumps {
        let phi: Vec<f64> = mesh
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let x = (r - c) / w;
                let essential = (i == 0 && !inner_free) || i == mesh.n_nodes() - 1;
                if essential || x.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - x * x).powi(2)
                }
            })
            .collect();
        let num = 2.0 * energy_sampled(mesh, &vq, &phi)?;
        let fq = mesh.at_quad(&phi);
        let den: f64 = fq.iter().zip(mesh.quad_weights()).map(|(f, w)| spow(*f, crit).abs() * w).sum();
        if den > 0.0 {
            best = best.min(num / den.powf((mf - 2.0) / mf));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelManifold;
    use std::f64::consts::PI;

    #[test]
    fn line_dirichlet_tone() {
        let mesh = RadialMesh::line(2.0, 0.0, 1.0, 400).unwrap();
        let t = fundamental_tone(&mesh, &PotentialProfile::zero()).unwrap();
        assert!((t.lambda / (PI * PI) - 1.0).abs() < 1e-5);
        assert!(t.residual < 1e-10);
    }

    #[test]
    fn p_laplacian_line_tone() {
        for &p in &[1.5, 3.0] {
            let mesh = RadialMesh::line(p, 0.0, 1.0, 400).unwrap();
            let t = fundamental_tone(&mesh, &PotentialProfile::zero()).unwrap();
            let pi_p = 2.0 * PI / (p * (PI / p).sin());
            let exact = (p - 1.0) * pi_p.powf(p);
            assert!((t.lambda / exact - 1.0).abs() < 1e-3, "p={p}: {} vs {exact}", t.lambda);
        }
    }

    #[test]
    fn ball_tone_flat() {
        let mm = ModelManifold::flat(3, 2.0).unwrap();
        let mesh = RadialMesh::ball(&mm, PI, 400).unwrap();
        let t = fundamental_tone(&mesh, &PotentialProfile::zero()).unwrap();
        assert!((t.lambda - 1.0).abs() < 1e-4);
        assert!(t.eigenfunction.values.iter().all(|v| *v >= 0.0));
    }
}
