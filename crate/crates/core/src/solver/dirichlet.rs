use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, SymTridiag};
use crate::mesh::{energy_sampled, residual_sampled, DiscreteFunction, PotentialProfile, RadialMesh};
use crate::spectral::fundamental_tone_sampled;

use super::Nonlinearity;

/// Values imposed on the essential boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryData {
    pub inner: f64,
    pub outer: f64,
}

impl BoundaryData {
    pub fn uniform(c: f64) -> Self {
        BoundaryData { inner: c, outer: c }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Scaled residual at which Newton stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Verify `lambda_A > 0` before solving.
    pub check_coercivity: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-9, max_iter: 200, check_coercivity: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirichletSolution {
    pub solution: DiscreteFunction,
    pub iterations: usize,
    /// `max_i |R_i| / S_i` over the free nodes.
    pub residual: f64,
}

/// Everything a Newton step needs about `A`, `B` and `F` on a mesh.
pub(crate) struct Problem<'a> {
    pub mesh: &'a RadialMesh,
    pub aq: &'a [f64],
    pub bq: &'a [f64],
    pub f: &'a Nonlinearity,
}

impl Problem<'_> {
    /// `J(z) = Q_A(z) + \int B F~(z_+)`.
    pub fn energy(&self, z: &[f64]) -> Result<f64> {
        let e = energy_sampled(self.mesh, self.aq, z)?;
        let zq = self.mesh.at_quad(z);
        let w = self.mesh.quad_weights();
        let s: f64 = zq
            .iter()
            .zip(self.bq)
            .zip(w)
            .filter(|((_, b), _)| **b != 0.0)
            .map(|((z, b), w)| b * self.f.primitive(*z) * w)
            .sum();
        Ok(e + s)
    }

    /// Weak residual `J'(z)[N_i]` and the magnitude of its terms.
    pub fn residual(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mut r, mut s) = residual_sampled(self.mesh, self.aq, z)?;
        let zq = self.mesh.at_quad(z);
        let fb: Vec<f64> =
            zq.iter().zip(self.bq).map(|(z, b)| if *b == 0.0 { 0.0 } else { b * self.f.eval(*z) }).collect();
        let l = self.mesh.load(&fb);
        let la = self.mesh.load(&fb.iter().map(|v| v.abs()).collect::<Vec<_>>());
        for i in 0..r.len() {
            r[i] += l[i];
            s[i] += la[i];
        }
        Ok((r, s))
    }

    pub fn scaled_residual(&self, z: &[f64]) -> Result<f64> {
        let (r, s) = self.residual(z)?;
        Ok(scaled(self.mesh, &r, &s))
    }

    /// Regularized second derivative of `J` at `z`.
    pub fn hessian(&self, z: &[f64]) -> SymTridiag {
        let p = self.mesh.p();
        let mesh = self.mesh;
        if p == 2.0 {
            let zq = mesh.at_quad(z);
            let wq: Vec<f64> =
                zq.iter().zip(self.aq).zip(self.bq).map(|((z, a), b)| -a + b * self.f.derivative(*z)).collect();
            return mesh.stiffness(None).add_scaled(1.0, &mesh.mass(Some(&wq)));
        }
        let s = mesh.slopes(z);
        let smax = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let eta2 = (1e-8 * smax).powi(2) + f64::MIN_POSITIVE;
        let coeff: Vec<f64> = s.iter().map(|d| (p - 1.0) * (d * d + eta2).powf(0.5 * (p - 2.0))).collect();
        let zq = mesh.at_quad(z);
        let zmax = zq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let zeta2 = (1e-6 * zmax).powi(2) + f64::MIN_POSITIVE;
        let wq: Vec<f64> = zq
            .iter()
            .zip(self.aq)
            .zip(self.bq)
            .map(|((z, a), b)| -(p - 1.0) * a * (z * z + zeta2).powf(0.5 * (p - 2.0)) + b * self.f.derivative(*z))
            .collect();
        mesh.stiffness(Some(&coeff)).add_scaled(1.0, &mesh.mass(Some(&wq)))
    }

    /// Positive definite metric for the gradient fallback.
    pub fn metric(&self, z: &[f64]) -> SymTridiag {
        let p = self.mesh.p();
        let s = self.mesh.slopes(z);
        let smax = s.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let coeff: Vec<f64> =
            s.iter().map(|d| (p - 1.0) * (d * d + (1e-2 * smax).powi(2)).powf(0.5 * (p - 2.0))).collect();
        let k = self.mesh.stiffness(Some(&coeff));
        let m = self.mesh.mass(None);
        let scale = k.diag.iter().sum::<f64>() / m.diag.iter().sum::<f64>();
        k.add_scaled(1e-2 * scale, &m)
    }
}

/// `max_i |R_i| / S_i` over the free nodes: every node has to balance its
/// own terms, however small the measure is there.
pub(crate) fn scaled(mesh: &RadialMesh, r: &[f64], s: &[f64]) -> f64 {
    let (lo, hi) = mesh.free_range();
    (lo..hi).map(|i| if s[i] > 0.0 { r[i].abs() / s[i] } else { r[i].abs() }).fold(0.0, f64::max)
}

/// `max_i |R_i| / max_i S_i`, a weaker norm that tolerates consistency
/// errors where the measure is small.
pub(crate) fn scaled_global(mesh: &RadialMesh, r: &[f64], s: &[f64]) -> f64 {
    let (lo, hi) = mesh.free_range();
    let num = r[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let den = s.iter().fold(0.0f64, |m, v| m.max(*v));
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Boundary lift: constant on a ball, linear across an annulus.
pub(crate) fn lift(mesh: &RadialMesh, bd: BoundaryData) -> Vec<f64> {
    let (lo, hi) = mesh.free_range();
    if lo == 0 {
        return vec![bd.outer; mesh.n_nodes()];
    }
    if hi == mesh.n_nodes() {
        return vec![bd.inner; mesh.n_nodes()];
    }
    let (a, b) = (mesh.inner_radius(), mesh.outer_radius());
    mesh.nodes().iter().map(|&r| bd.inner + (bd.outer - bd.inner) * (r - a) / (b - a)).collect()
}

pub(crate) fn apply_boundary(mesh: &RadialMesh, z: &mut [f64], bd: BoundaryData) {
    let (lo, hi) = mesh.free_range();
    if lo == 1 {
        z[0] = bd.inner;
    }
    if hi < mesh.n_nodes() {
        let n = z.len();
        z[n - 1] = bd.outer;
    }
}

/// `lambda_A > 0`; skipped when `A <= 0`, since then the tone is at least
/// that of the plain p-Laplacian, which is positive with an essential
/// boundary.
pub(crate) fn ensure_coercive(mesh: &RadialMesh, aq: &[f64]) -> Result<()> {
    if aq.iter().all(|a| *a <= 0.0) {
        return Ok(());
    }
    let tone = fundamental_tone_sampled(mesh, aq)?.lambda;
    if tone > 0.0 {
        Ok(())
    } else {
        Err(Error::NotCoercive(tone))
    }
}

/// Positive solution of `Delta_p z + A z^{p-1} - B F(z) = 0` with the given
/// values on the essential boundary.
pub fn dirichlet_solve(
    mesh: &RadialMesh,
    a: &PotentialProfile,
    b: &PotentialProfile,
    f: &Nonlinearity,
    bd: BoundaryData,
    opts: &SolverOptions,
) -> Result<DiscreteFunction> {
    let (aq, bq) = (a.on_mesh(mesh)?, b.on_mesh(mesh)?);
    dirichlet_solve_sampled(mesh, &aq, &bq, f, bd, opts)
}

pub fn dirichlet_solve_sampled(
    mesh: &RadialMesh,
    aq: &[f64],
    bq: &[f64],
    f: &Nonlinearity,
    bd: BoundaryData,
    opts: &SolverOptions,
) -> Result<DiscreteFunction> {
    Ok(dirichlet_solve_detailed(mesh, aq, bq, f, bd, opts, None)?.solution)
}

/// [`dirichlet_solve_sampled`] with an optional starting guess and the
/// convergence data.
pub fn dirichlet_solve_detailed(
    mesh: &RadialMesh,
    aq: &[f64],
    bq: &[f64],
    f: &Nonlinearity,
    bd: BoundaryData,
    opts: &SolverOptions,
    initial: Option<&[f64]>,
) -> Result<DirichletSolution> {
    let (lo, hi) = mesh.free_range();
    if hi <= lo {
        return Err(Error::NoInteriorDof);
    }
    if let Some(k) = bq.iter().position(|b| *b < 0.0) {
        return Err(Error::InvalidInput(format!("B must be nonnegative, B({}) = {}", mesh.quad_radii()[k], bq[k])));
    }
    if let Some(k) = aq.iter().chain(bq).position(|v| !v.is_finite()) {
        return Err(Error::SingularPotential(mesh.quad_radii()[k % aq.len()]));
    }
    if opts.check_coercivity {
        ensure_coercive(mesh, aq)?;
    }
    let pb = Problem { mesh, aq, bq, f };
    let mut z = match initial {
        Some(v) if v.len() == mesh.n_nodes() => v.to_vec(),
        _ => lift(mesh, bd),
    };
    apply_boundary(mesh, &mut z, bd);
    let mut energy = pb.energy(&z)?;
    let (r0, s0) = pb.residual(&z)?;
    let mut r = r0;
    let mut res = scaled(mesh, &r, &s0);
    let mut it = 0;
    while res >= opts.tol {
        if it >= opts.max_iter {
            return Err(Error::NonConvergence { iterations: it, residual: res });
        }
        it += 1;
        let g = r[lo..hi].to_vec();
        let newton = pb.hessian(&z).block(lo, hi).solve(&g).filter(|d| dot(d, &g) > 0.0);
        let fallback = || pb.metric(&z).block(lo, hi).solve(&g).unwrap_or_else(|| g.clone());
        let mut accepted = None;
        for d in newton.into_iter().chain(std::iter::once_with(fallback)) {
            accepted = line_search(&pb, &z, &d, &g, energy, res)?;
            if accepted.is_some() {
                break;
            }
        }
        let Some((y, ey, r2, res2)) = accepted else {
            return Err(Error::NonConvergence { iterations: it, residual: res });
        };
        z = y;
        energy = ey;
        r = r2;
        res = res2;
    }
    Ok(DirichletSolution { solution: mesh.function(z)?, iterations: it, residual: res })
}

type Step = (Vec<f64>, f64, Vec<f64>, f64);

/// Backtracking along `-d` until the energy decreases enough.
fn line_search(pb: &Problem<'_>, z: &[f64], d: &[f64], g: &[f64], energy: f64, res: f64) -> Result<Option<Step>> {
    let slope = dot(d, g);
    if !(slope > 0.0) {
        return Ok(None);
    }
    let (lo, hi) = pb.mesh.free_range();
    let mut t = 1.0;
    for _ in 0..60 {
        let mut y = z.to_vec();
        for (k, i) in (lo..hi).enumerate() {
            y[i] -= t * d[k];
        }
        let ey = pb.energy(&y)?;
        let slack = 1e-13 * (energy.abs() + 1.0);
        if ey <= energy - 1e-4 * t * slope + slack {
            let (r2, s2) = pb.residual(&y)?;
            let res2 = scaled(pb.mesh, &r2, &s2);
            // Near the rounding floor the energy is flat; insist that the
            // residual does not blow up instead.
            if ey <= energy - 1e-4 * t * slope || res2 < 2.0 * res {
                return Ok(Some((y, ey, r2, res2)));
            }
        }
        t *= 0.5;
    }
    Ok(None)
}

/// Weak residual of `z` for the equation with coefficients `A`, `B`:
/// `max_i |R_i|` over the free nodes divided by the largest term magnitude.
pub fn weak_residual(
    mesh: &RadialMesh,
    a: &PotentialProfile,
    b: &PotentialProfile,
    f: &Nonlinearity,
    z: &DiscreteFunction,
) -> Result<f64> {
    let (aq, bq) = (a.on_mesh(mesh)?, b.on_mesh(mesh)?);
    let (r, s) = Problem { mesh, aq: &aq, bq: &bq, f }.residual(&z.values)?;
    Ok(scaled_global(mesh, &r, &s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelManifold;

    #[test]
    fn constants_solve_the_homogeneous_problem() {
        let mm = ModelManifold::flat(3, 2.0).unwrap();
        let mesh = RadialMesh::annulus(&mm, 1.0, 3.0, 40).unwrap();
        let z = dirichlet_solve(
            &mesh,
            &PotentialProfile::zero(),
            &PotentialProfile::zero(),
            &Nonlinearity::power(3.0),
            BoundaryData::uniform(0.3),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(z.values.iter().all(|v| (v - 0.3).abs() < 1e-14));
    }

    #[test]
    fn p_harmonic_annulus() {
        // Radial p-harmonic functions in R^m: r^{(p-m)/(p-1)}.
        let mm = ModelManifold::flat(4, 3.0).unwrap();
        let mesh4 = RadialMesh::annulus(&mm, 1.0, 2.0, 400).unwrap();
        let e = (3.0 - 4.0) / 2.0;
        let exact = |r: f64| f64::powf(r, e);
        let z = dirichlet_solve(
            &mesh4,
            &PotentialProfile::zero(),
            &PotentialProfile::zero(),
            &Nonlinearity::power(3.0),
            BoundaryData { inner: 1.0, outer: exact(2.0) },
            &SolverOptions::default(),
        )
        .unwrap();
        for (r, v) in mesh4.nodes().iter().zip(&z.values) {
            assert!((v - exact(*r)).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_negative_b() {
        let mesh = RadialMesh::line(2.0, 0.0, 1.0, 10).unwrap();
        let r = dirichlet_solve(
            &mesh,
            &PotentialProfile::zero(),
            &PotentialProfile::Constant(-1.0),
            &Nonlinearity::power(3.0),
            BoundaryData::uniform(1.0),
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
