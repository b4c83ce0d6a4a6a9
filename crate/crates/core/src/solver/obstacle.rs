use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{DiscreteFunction, PotentialProfile, RadialMesh};

use super::dirichlet::{ensure_coercive, Problem};
use super::Nonlinearity;

#[derive(Debug, Clone, Serialize)]
pub struct ObstacleResult {
    pub solution: DiscreteFunction,
    /// Nodes where `u = psi`.
    pub contact: Vec<bool>,
    /// `max_i |min(u_i - psi_i, R_i / H_ii)| / max |theta|` over free nodes.
    pub complementarity: f64,
    pub iterations: usize,
}

/// Minimizes `Q_V` over `{u >= psi, u = theta on the essential boundary}`
/// by a projected Newton method with an active-set Hessian.
pub fn obstacle_solve(
    mesh: &RadialMesh,
    v: &PotentialProfile,
    psi: &DiscreteFunction,
    theta: &DiscreteFunction,
) -> Result<ObstacleResult> {
    let n = mesh.n_nodes();
    if psi.values.len() != n || theta.values.len() != n {
        return Err(Error::InvalidInput("obstacle and datum must live on the mesh".into()));
    }
    let (lo, hi) = mesh.free_range();
    if hi <= lo {
        return Err(Error::NoInteriorDof);
    }
    for i in (0..n).filter(|&i| !mesh.is_free(i)) {
        if theta.values[i] < psi.values[i] {
            return Err(Error::InvalidInput(format!("boundary datum below the obstacle at node {i}")));
        }
    }
    let vq = v.on_mesh(mesh)?;
    ensure_coercive(mesh, &vq)?;
    let zero = vec![0.0; vq.len()];
    let f = Nonlinearity::power(2.0);
    let pb = Problem { mesh, aq: &vq, bq: &zero, f: &f };
    let psi_v = &psi.values;
    let scale = theta
        .values
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(psi_v.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        .max(f64::MIN_POSITIVE);

    let mut u: Vec<f64> =
        (0..n).map(|i| if mesh.is_free(i) { theta.values[i].max(psi_v[i]) } else { theta.values[i] }).collect();
    let mut energy = pb.energy(&u)?;
    let measure = |u: &[f64], r: &[f64], h: &[f64]| -> f64 {
        (lo..hi).map(|i| (u[i] - psi_v[i]).min(r[i] / h[i - lo]).abs()).fold(0.0, f64::max) / scale
    };
    let max_iter = 500;
    let mut it = 0;
    let mut stalled = false;
    loop {
        let (r, _) = pb.residual(&u)?;
        let hess = pb.hessian(&u).block(lo, hi);
        let hd: Vec<f64> = hess.diag.iter().map(|d| d.abs().max(f64::MIN_POSITIVE)).collect();
        let comp = measure(&u, &r, &hd);
        if comp <= 1e-12 || (stalled && comp <= 1e-9) {
            let contact = (0..n).map(|i| u[i] <= psi_v[i]).collect();
            return Ok(ObstacleResult { solution: mesh.function(u)?, contact, complementarity: comp, iterations: it });
        }
        if it >= max_iter {
            return Err(Error::NonConvergence { iterations: it, residual: comp });
        }
        it += 1;
        // Nearly active nodes whose gradient pushes into the obstacle.
        let eps_act = (comp * scale).min(1e-3 * scale);
        let active: Vec<bool> = (lo..hi).map(|i| u[i] - psi_v[i] <= eps_act && r[i] > 0.0).collect();
        let mut h = hess.clone();
        for k in 0..h.len() {
            if active[k] {
                h.diag[k] = hd[k];
                if k > 0 {
                    h.off[k - 1] = 0.0;
                }
                if k < h.off.len() {
                    h.off[k] = 0.0;
                }
            }
        }
        let g = &r[lo..hi];
        let d = match h.solve(g) {
            Some(d) if (0..d.len()).filter(|&k| !active[k]).map(|k| d[k] * g[k]).sum::<f64>() >= 0.0 => d,
            _ => {
                let m = pb.metric(&u).block(lo, hi);
                m.solve(g).unwrap_or_else(|| g.to_vec())
            }
        };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let mut y = u.clone();
            let mut decrease = 0.0;
            for (k, i) in (lo..hi).enumerate() {
                y[i] = (u[i] - t * d[k]).max(psi_v[i]);
                decrease += if active[k] { g[k] * (u[i] - y[i]) } else { t * g[k] * d[k] };
            }
            let ey = pb.energy(&y)?;
            if ey <= energy - 1e-4 * decrease + 1e-14 * (energy.abs() + 1.0) {
                let (r2, _) = pb.residual(&y)?;
                let h2: Vec<f64> =
                    pb.hessian(&y).block(lo, hi).diag.iter().map(|d| d.abs().max(f64::MIN_POSITIVE)).collect();
                if ey < energy || measure(&y, &r2, &h2) < comp {
                    u = y;
                    energy = ey;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            if stalled || comp > 1e-9 {
                return Err(Error::NonConvergence { iterations: it, residual: comp });
            }
            // Rounding floor: report what we have on the next pass.
            stalled = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::bump;

    #[test]
    fn inactive_obstacle_gives_harmonic_solution() {
        let mesh = RadialMesh::line(2.0, 0.0, 1.0, 50).unwrap();
        let r = obstacle_solve(&mesh, &PotentialProfile::zero(), &mesh.constant(0.0), &mesh.constant(1.0)).unwrap();
        assert!(r.solution.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn obstacle_above_solution_is_touched() {
        let mesh = RadialMesh::line(2.0, 0.0, 1.0, 100).unwrap();
        let psi = mesh.interpolate(|r| bump(r, 0.5, 0.3, 2.0));
        let r = obstacle_solve(&mesh, &PotentialProfile::zero(), &psi, &mesh.constant(1.0)).unwrap();
        assert!(r.contact[50]);
        assert!(r.complementarity < 1e-10);
        assert!(r.solution.values.iter().zip(&psi.values).all(|(u, p)| u >= p));
    }
}
