//! The radial p-Green kernel `G(r) = \int_r^\infty (e^{f} g^{1-m})^{1/(p-1)} ds`
//! and the Hardy weight it generates.
//!
//! Integrals are split at a cutoff `R*`: adaptive quadrature in the variable
//! `ln s` up to `R*`, then an analytic tail. Writing the integrand as
//! `h = e^{-Phi}`, the tail is `h(R) / (Phi' + Phi''/Phi')`, which is exact
//! for both power-law and exponential decay.

use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, WarpingFunction};
use crate::quad;

const REL_TOL: f64 = 1e-13;

/// Verdict of the subcriticality test on a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcriticality {
    /// The Green integral converges: the p-Laplacian is non-parabolic.
    Subcritical,
    /// The Green integral diverges.
    Parabolic,
    Inconclusive,
}

impl Subcriticality {
    pub fn is_subcritical(self) -> bool {
        self == Subcriticality::Subcritical
    }
}

/// Where quadrature stops and the analytic tail takes over.
pub fn cutoff_radius(mm: &ModelManifold) -> f64 {
    match mm.warping() {
        WarpingFunction::Flat => 1e4,
        WarpingFunction::Hyperbolic { kappa } => 50.0 / kappa,
        WarpingFunction::Numeric(..) => mm.r_max(),
    }
}

/// `ln h(s)` with `h = (e^{f} g^{1-m})^{1/(p-1)}`.
pub fn ln_integrand(mm: &ModelManifold, s: f64) -> Result<f64> {
    let lg = mm.warping().ln_value(s)?;
    Ok((mm.drift_at(s) - (mm.m() as f64 - 1.0) * lg) / (mm.p() - 1.0))
}

/// `ln` of the analytic tail `\int_R^\infty h`, or `NotSubcritical` when
/// the local decay rate says the integral diverges.
fn ln_tail(mm: &ModelManifold, r: f64) -> Result<f64> {
    let w = mm.warping();
    let m1 = mm.m() as f64 - 1.0;
    let q = mm.p() - 1.0;
    let ell = w.log_derivative(r)?;
    let curv = w.curvature(r)?;
    let (df, ddf) = match mm.drift() {
        Some(f) => (f.derivative(r), f.second_derivative(r)),
        None => (0.0, 0.0),
    };
    let d1 = (m1 * ell - df) / q;
    let d2 = (m1 * (curv - ell * ell) - ddf) / q;
    if !(d1 > 0.0) {
        return Err(Error::NotSubcritical(format!("integrand does not decay at r = {r}")));
    }
    let denom = d1 + d2 / d1;
    if !(denom > 1e-9 * d1) || !denom.is_finite() {
        return Err(Error::NotSubcritical(format!("Green integral diverges (decay rate {denom:e} at r = {r})")));
    }
    Ok(ln_integrand(mm, r)? - denom.ln())
}

/// `ln \int_a^b h(s) ds` by quadrature in `t = ln s`.
fn ln_segment(mm: &ModelManifold, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(f64::NEG_INFINITY);
    }
    let (ta, tb) = (a.ln(), b.ln());
    let c0 = ln_integrand(mm, a)? + ta;
    // Probe once so that domain errors surface as errors, not NaNs.
    ln_integrand(mm, b)?;
    let (v, _) = quad::integrate(
        |t| {
            let s = t.exp();
            match ln_integrand(mm, s) {
                Ok(l) => (l + t - c0).exp(),
                Err(_) => f64::NAN,
            }
        },
        ta,
        tb,
        REL_TOL,
        0.0,
    );
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!("Green integrand not finite on [{a}, {b}]")));
    }
    Ok(c0 + v.ln())
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln G(r) = ln \int_r^\infty h(s) ds`.
pub fn ln_green_integral(mm: &ModelManifold, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    let cut = cutoff_radius(mm);
    if r > mm.r_max() {
        return Err(Error::OutOfDomain { r, r_max: mm.r_max() });
    }
    if r >= cut {
        return ln_tail(mm, r);
    }
    let tail = ln_tail(mm, cut)?;
    Ok(log_add(ln_segment(mm, r, cut)?, tail))
}

/// Tri-state subcriticality test from the decay of the Green integrand over
/// doubling windows beyond the cutoff radius.
pub fn is_subcritical_model(mm: &ModelManifold) -> Subcriticality {
    let (r0, windows) = match mm.warping() {
        WarpingFunction::Numeric(..) => (mm.r_max() / 16.0, 4),
        _ => (cutoff_radius(mm), 4),
    };
    let mut ln_t = Vec::with_capacity(windows);
    for k in 0..windows {
        let a = r0 * 2f64.powi(k as i32);
        match ln_segment(mm, a, 2.0 * a) {
            Ok(v) => ln_t.push(v),
            Err(_) => return Subcriticality::Inconclusive,
        }
    }
    // For h ~ s^{-gamma}, successive window integrals scale by 2^{1-gamma}.
    let gamma: Vec<f64> = ln_t.windows(2).map(|w| 1.0 - (w[1] - w[0]) / std::f64::consts::LN_2).collect();
    let last = &gamma[gamma.len() - 2..];
    if last.iter().all(|&g| g > 1.1) {
        Subcriticality::Subcritical
    } else if last.iter().all(|&g| g < 1.01) {
        Subcriticality::Parabolic
    } else {
        Subcriticality::Inconclusive
    }
}

/// Small-radius behaviour of `G`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymptoticClass {
    /// `G(r) r^{exponent} -> constant` as `r -> 0` (case `p < m`).
    Power { exponent: f64, constant: f64 },
    /// `G(r) ~ ln(1/r)` (case `p = m`).
    Logarithmic,
    /// `G(0)` finite (case `p > m`).
    Bounded,
}

/// Green kernel of a subcritical model, evaluated on demand.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    model: ModelManifold,
    class: AsymptoticClass,
}

impl GreenKernel {
    /// Fails with `NotSubcritical` when the defining integral diverges.
    pub fn new(mm: &ModelManifold) -> Result<Self> {
        let cut = cutoff_radius(mm).min(mm.r_max());
        ln_tail(mm, cut)?;
        let (m, p) = (mm.m() as f64, mm.p());
        let class = if p < m {
            AsymptoticClass::Power { exponent: (m - p) / (p - 1.0), constant: (p - 1.0) / (m - p) }
        } else if p == m {
            AsymptoticClass::Logarithmic
        } else {
            AsymptoticClass::Bounded
        };
        Ok(GreenKernel { model: mm.clone(), class })
    }

    pub fn model(&self) -> &ModelManifold {
        &self.model
    }

    pub fn asymptotic_class(&self) -> AsymptoticClass {
        self.class
    }

    pub fn is_integrable(&self) -> bool {
        true
    }

    pub fn ln_value(&self, r: f64) -> Result<f64> {
        ln_green_integral(&self.model, r)
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        Ok(self.ln_value(r)?.exp())
    }

    /// `G'(r) = -h(r)`.
    pub fn derivative(&self, r: f64) -> Result<f64> {
        Ok(-ln_integrand(&self.model, r)?.exp())
    }

    /// Values at many radii, accumulating segment integrals from the
    /// largest radius inward.
    pub fn values_at(&self, radii: &[f64]) -> Result<Vec<f64>> {
        let mut idx: Vec<usize> = (0..radii.len()).collect();
        idx.sort_by(|&a, &b| radii[b].partial_cmp(&radii[a]).unwrap_or(std::cmp::Ordering::Equal));
        let mut out = vec![0.0; radii.len()];
        let mut prev: Option<(f64, f64)> = None;
        for &i in &idx {
            let r = radii[i];
            let lv = match prev {
                Some((rp, lp)) if r >= rp => lp,
                Some((rp, lp)) if rp <= cutoff_radius(&self.model) => log_add(lp, ln_segment(&self.model, r, rp)?),
                _ => self.ln_value(r)?,
            };
            out[i] = lv.exp();
            prev = Some((r, lv));
        }
        Ok(out)
    }
}

/// Hardy weight `((p-1)/p)^p |G'|^p / G^p` of the Green kernel.
pub fn green_hardy_weight(green: &GreenKernel, r: f64) -> Result<f64> {
    let p = green.model.p();
    let ln_h = ln_integrand(&green.model, r)?;
    let ln_g = green.ln_value(r)?;
    Ok(((p - 1.0) / p).powf(p) * (p * (ln_h - ln_g)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_green_is_a_power() {
        let mm = ModelManifold::flat(3, 2.0).unwrap();
        let g = GreenKernel::new(&mm).unwrap();
        for &r in &[1e-3, 0.5, 2.0, 3e4] {
            assert!((g.value(r).unwrap() * r - 1.0).abs() < 1e-11, "r = {r}");
        }
    }

    #[test]
    fn hyperbolic_plane_green() {
        // m = 2, p = 2: G = ln coth(r/2).
        let mm = ModelManifold::hyperbolic(2, 2.0, 1.0).unwrap();
        let g = GreenKernel::new(&mm).unwrap();
        for &r in &[0.05, 1.0, 10.0, 60.0] {
            let exact = (2.0 / f64::exp_m1(r)).ln_1p();
            assert!((g.value(r).unwrap() / exact - 1.0).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn batch_matches_pointwise() {
        let mm = ModelManifold::hyperbolic(3, 2.0, 0.7).unwrap();
        let g = GreenKernel::new(&mm).unwrap();
        let radii = [3.0, 0.01, 1.0, 80.0, 0.5];
        let batch = g.values_at(&radii).unwrap();
        for (r, b) in radii.iter().zip(batch) {
            assert!((b / g.value(*r).unwrap() - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn parabolic_models_are_rejected() {
        let mm = ModelManifold::flat(2, 2.0).unwrap();
        assert!(matches!(GreenKernel::new(&mm), Err(Error::NotSubcritical(_))));
        assert_eq!(is_subcritical_model(&mm), Subcriticality::Parabolic);
        let mm = ModelManifold::flat(3, 3.0).unwrap();
        assert_eq!(is_subcritical_model(&mm), Subcriticality::Parabolic);
    }
}
