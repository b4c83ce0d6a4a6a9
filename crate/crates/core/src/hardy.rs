//! Sharp Hardy weights on model manifolds.
//!
//! The general weight is `chi = ((p-1)/p)^p [g^alpha \int_r^\infty g^{-alpha}]^{-p}`
//! with `alpha = (m-1)/(p-1)`; with a drift the integrand carries the extra
//! factor `e^{f/(p-1)}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, WarpingFunction};
use crate::green::{ln_green_integral, ln_integrand};

/// Leading behaviour of `chi` at the pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OriginAsymptotic {
    /// `chi(r) r^p -> constant` (case `p < m`).
    Power { constant: f64 },
    /// `chi(r) r^m |ln r|^m -> constant` (case `p = m`).
    Logarithmic { constant: f64 },
    /// `p > m`: the Green kernel stays bounded at the pole.
    Bounded,
}

/// The Hardy weight of a subcritical model together with its asymptotics.
#[derive(Debug, Clone)]
pub struct HardyWeight {
    model: ModelManifold,
}

impl HardyWeight {
    /// Fails with `NotSubcritical` when the Green integral diverges.
    pub fn new(mm: &ModelManifold) -> Result<Self> {
        crate::green::GreenKernel::new(mm)?;
        Ok(HardyWeight { model: mm.clone() })
    }

    pub fn model(&self) -> &ModelManifold {
        &self.model
    }

    pub fn alpha(&self) -> f64 {
        self.model.alpha()
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        chi_general(&self.model, r)
    }

    /// `((p-1)/p)^p alpha^p kappa^p` on hyperbolic models, `0` when flat.
    pub fn limit_at_infinity(&self) -> Option<f64> {
        self.model.kappa().map(|k| chi_limit(self.model.p(), self.alpha(), k))
    }

    pub fn origin_asymptotic(&self) -> OriginAsymptotic {
        let (m, p) = (self.model.m() as f64, self.model.p());
        if p < m {
            OriginAsymptotic::Power { constant: ((m - p) / p).powf(p) }
        } else if p == m {
            OriginAsymptotic::Logarithmic { constant: ((m - 1.0) / m).powf(m) }
        } else {
            OriginAsymptotic::Bounded
        }
    }

    /// Samples at many radii at once (shares the Green integral work).
    pub fn values_at(&self, radii: &[f64]) -> Result<Vec<f64>> {
        let green = crate::green::GreenKernel::new(&self.model)?;
        let gv = green.values_at(radii)?;
        let p = self.model.p();
        let c = ((p - 1.0) / p).powf(p);
        radii.iter().zip(gv).map(|(&r, g)| Ok(c * (p * (ln_integrand(&self.model, r)? - g.ln())).exp())).collect()
    }
}

/// `((p-1)/p)^p alpha^p kappa^p`.
pub fn chi_limit(p: f64, alpha: f64, kappa: f64) -> f64 {
    ((p - 1.0) / p * alpha * kappa).powf(p)
}

/// The sharp Hardy weight of the model at radius `r`.
pub fn chi_general(mm: &ModelManifold, r: f64) -> Result<f64> {
    let p = mm.p();
    let ln_i = ln_green_integral(mm, r)?;
    let ln_h = ln_integrand(mm, r)?;
    Ok(((p - 1.0) / p).powf(p) * (p * (ln_h - ln_i)).exp())
}

/// Closed forms on the hyperbolic space of curvature `-kappa^2` when
/// `alpha = (m-1)/(p-1)` is 1 or 2.
pub fn chi_hyperbolic_closed(m: usize, p: f64, kappa: f64, r: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::UnsupportedExponent(p));
    }
    if !(kappa > 0.0) || !(r > 0.0) {
        return Err(Error::InvalidInput(format!("need kappa > 0 and r > 0, got kappa = {kappa}, r = {r}")));
    }
    let alpha = (m as f64 - 1.0) / (p - 1.0);
    let c = ((p - 1.0) / p).powf(p);
    let x = kappa * r;
    if (alpha - 1.0).abs() < 1e-12 {
        // g I_1 = sinh(x) ln coth(x/2) / kappa
        let lc = (2.0 / x.exp_m1()).ln_1p();
        let prod = if x > 700.0 {
            // sinh(x) ln coth(x/2) -> 1 with corrections of order e^{-2x}.
            1.0
        } else {
            x.sinh() * lc
        };
        Ok(c * kappa.powf(p) * prod.powf(-p))
    } else if (alpha - 2.0).abs() < 1e-12 {
        Ok(c * (2.0 * kappa).powf(p) * (-(-2.0 * x).exp_m1()).powf(-p))
    } else {
        Err(Error::UnsupportedAlpha(alpha))
    }
}

/// One downward step of the hyperbolic recursion: recovers `chi_alpha`
/// from `chi_{alpha+2}` through
/// `alpha chi_a^{-1/p} = p coth(kr)/((p-1)k) - (alpha+1)/(k^2 g_k^2) chi_{a+2}^{-1/p}`.
pub fn chi_recursion_step(alpha: f64, p: f64, kappa: f64, r: f64, chi_alpha_plus_2: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(chi_alpha_plus_2 > 0.0) || !(kappa > 0.0) || !(r > 0.0) {
        return Err(Error::InvalidInput("recursion needs alpha, kappa, r and chi positive".into()));
    }
    let x = kappa * r;
    let g = x.sinh() / kappa;
    let rhs =
        p / ((p - 1.0) * kappa * x.tanh()) - (alpha + 1.0) / (kappa * kappa * g * g) * chi_alpha_plus_2.powf(-1.0 / p);
    if !(rhs > 0.0) || !rhs.is_finite() {
        return Err(Error::NonPositiveQuotient(r));
    }
    Ok((rhs / alpha).powf(-p))
}

/// A space form carrying multipole weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceForm {
    Flat,
    /// Curvature `-kappa^2`. Points are given by their spatial coordinates
    /// `v` on the hyperboloid `-x_0^2 + |v|^2 = -1/kappa^2`, `x_0 > 0`.
    Hyperbolic {
        kappa: f64,
    },
}

impl SpaceForm {
    /// Geodesic distance between two points given in the coordinates above.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        match *self {
            SpaceForm::Flat => d2.sqrt(),
            SpaceForm::Hyperbolic { kappa } => {
                let k2 = 1.0 / (kappa * kappa);
                let x0 = (k2 + x.iter().map(|a| a * a).sum::<f64>()).sqrt();
                let y0 = (k2 + y.iter().map(|a| a * a).sum::<f64>()).sqrt();
                // Minkowski chordal length: 4 sinh^2(kappa d / 2) / kappa^2.
                let chord2 = (d2 - (x0 - y0) * (x0 - y0)).max(0.0);
                2.0 / kappa * (kappa * chord2.sqrt() / 2.0).asinh()
            }
        }
    }
}

/// A point mass of the multipole measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub position: Vec<f64>,
    pub mass: f64,
}

/// `sum_j t_j chi(dist(x, y_j))` for a sub-probability measure of poles.
pub fn multipole_weight(space: SpaceForm, m: usize, p: f64, poles: &[Pole], x: &[f64]) -> Result<f64> {
    let total: f64 = poles.iter().map(|q| q.mass).sum();
    if poles.iter().any(|q| q.mass < 0.0) {
        return Err(Error::InvalidInput("pole masses must be non-negative".into()));
    }
    if total > 1.0 + 1e-12 {
        return Err(Error::MassExceeded(total));
    }
    if poles.iter().any(|q| q.position.len() != x.len() || x.len() != m) {
        return Err(Error::InvalidInput(format!("points must have {m} coordinates")));
    }
    let mm = match space {
        SpaceForm::Flat => {
            if p >= m as f64 {
                return Err(Error::UnsupportedExponent(p));
            }
            ModelManifold::flat(m, p)?
        }
        SpaceForm::Hyperbolic { kappa } => ModelManifold::hyperbolic(m, p, kappa)?,
    };
    let mut s = 0.0;
    for q in poles.iter().filter(|q| q.mass > 0.0) {
        s += q.mass * chi_general(&mm, space.distance(x, &q.position))?;
    }
    Ok(s)
}

/// Outcome of the minimal-submanifold positivity scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaReport {
    pub m: usize,
    pub kappa: f64,
    pub min_zeta: f64,
    pub argmin: f64,
    /// `zeta(t) 2t / (m+2)` at the smallest grid radius.
    pub ratio_at_origin: f64,
    /// `zeta(t) 2 / ((m+1) kappa)` at the largest grid radius; `None` when flat.
    pub ratio_at_infinity: Option<f64>,
    pub positive: bool,
}

/// `zeta(t) = m g'/g - sqrt(chi)` with `chi` the `p = 2` weight of the
/// `m`-dimensional model of curvature `-kappa^2`.
pub fn zeta(m: usize, kappa: f64, t: f64) -> Result<f64> {
    let mm = ModelManifold::hyperbolic(m, 2.0, kappa)?;
    if m == 2 && kappa == 0.0 {
        // The flat plane is parabolic; chi vanishes identically here.
        return Ok(2.0 / t);
    }
    let ell = mm.warping().log_derivative(t)?;
    Ok(m as f64 * ell - chi_general(&mm, t)?.sqrt())
}

pub fn zeta_check(m: usize, kappa: f64, grid: &[f64]) -> Result<ZetaReport> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let mut min_zeta = f64::INFINITY;
    let mut argmin = grid[0];
    let mut vals = Vec::with_capacity(grid.len());
    for &t in grid {
        let z = zeta(m, kappa, t)?;
        if z < min_zeta {
            min_zeta = z;
            argmin = t;
        }
        vals.push(z);
    }
    let (i0, i1) = (0, grid.len() - 1);
    let tmin = grid[i0];
    let ratio_at_origin = vals[i0] * 2.0 * tmin / (m as f64 + 2.0);
    let ratio_at_infinity = (kappa > 0.0).then(|| vals[i1] * 2.0 / ((m as f64 + 1.0) * kappa));
    Ok(ZetaReport { m, kappa, min_zeta, argmin, ratio_at_origin, ratio_at_infinity, positive: min_zeta > 0.0 })
}

/// `n` log-spaced radii on `[a, b]`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// True for the flat and constant negative curvature models.
pub fn is_space_form(mm: &ModelManifold) -> bool {
    !matches!(mm.warping(), WarpingFunction::Numeric(..))
}
