//! Radial model manifolds: the warping function `g` solving the Jacobi
//! equation `g'' = G g`, and the measure `sigma_{m-1} g^{m-1} e^{-f} dr`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A shareable real function of the radial variable.
#[derive(Clone)]
pub struct RadialFunction(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl RadialFunction {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        RadialFunction(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        RadialFunction::new(move |_| c)
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        (self.0)(r)
    }

    /// Central difference derivative, one-sided near the origin.
    pub fn derivative(&self, r: f64) -> f64 {
        let h = 1e-5 * r.abs().max(1.0);
        if r > h {
            (self.eval(r + h) - self.eval(r - h)) / (2.0 * h)
        } else {
            (self.eval(r + h) - self.eval(r)) / h
        }
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        let h = 1e-4 * r.abs().max(1.0);
        let r = r.max(h);
        (self.eval(r + h) - 2.0 * self.eval(r) + self.eval(r - h)) / (h * h)
    }
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RadialFunction(..)")
    }
}

/// Piecewise-linear table on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
}

impl Table {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(Error::InvalidInput("table needs at least two (r, value) pairs".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("table radii must be strictly increasing".into()));
        }
        if r.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("table contains non-finite entries".into()));
        }
        Ok(Table { r, v })
    }

    /// Reads a two-column CSV file (`r,value`). A header row is optional.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_path(path)?;
        let (mut r, mut v) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Config(format!("{}:{}: expected two columns", path.display(), line + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    r.push(a);
                    v.push(b);
                }
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::Config(format!("{}:{}: cannot parse number", path.display(), line + 1)));
                }
            }
        }
        Table::new(r, v)
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Linear interpolation; constant extrapolation outside the grid.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        let n = self.r.len();
        if x <= self.r[0] {
            return self.v[0];
        }
        if x >= self.r[n - 1] {
            return self.v[n - 1];
        }
        let i = self.r.partition_point(|&ri| ri <= x) - 1;
        let t = (x - self.r[i]) / (self.r[i + 1] - self.r[i]);
        self.v[i] + t * (self.v[i + 1] - self.v[i])
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let tol = 1e-12 * self.r_max().abs().max(1.0);
        if x < self.r[0] - tol || x > self.r_max() + tol {
            return Err(Error::OutOfDomain { r: x, r_max: self.r_max() });
        }
        Ok(self.eval_clamped(x))
    }
}

/// The radial curvature datum `G(r)` of the Jacobi equation.
#[derive(Debug, Clone)]
pub enum CurvatureProfile {
    /// `G = kappa^2` with `kappa >= 0`.
    Constant(f64),
    Tabulated(Table),
    Function(RadialFunction),
}

impl CurvatureProfile {
    pub fn eval(&self, r: f64) -> Result<f64> {
        match self {
            CurvatureProfile::Constant(k) => Ok(k * k),
            CurvatureProfile::Tabulated(t) => t.eval(r),
            CurvatureProfile::Function(f) => Ok(f.eval(r)),
        }
    }

    fn domain_end(&self) -> f64 {
        match self {
            CurvatureProfile::Tabulated(t) => t.r_max(),
            _ => f64::INFINITY,
        }
    }
}

/// Tabulated solution of the Jacobi equation with Hermite interpolation.
#[derive(Debug, Clone)]
pub struct NumericWarping {
    r: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<f64>,
    ddg: Vec<f64>,
    positivity_radius: Option<f64>,
}

impl NumericWarping {
    fn locate(&self, x: f64) -> Result<(usize, f64, f64)> {
        let r_max = *self.r.last().unwrap();
        if !(x >= 0.0) || x > r_max * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain { r: x, r_max });
        }
        let n = self.r.len();
        let i = (self.r.partition_point(|&ri| ri <= x).max(1) - 1).min(n - 2);
        let h = self.r[i + 1] - self.r[i];
        Ok((i, (x - self.r[i]) / h, h))
    }

    fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, t: f64, h: f64) -> f64 {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1
    }

    fn value(&self, x: f64) -> Result<f64> {
        let (i, t, h) = self.locate(x)?;
        Ok(Self::hermite(self.g[i], self.dg[i], self.g[i + 1], self.dg[i + 1], t, h))
    }

    fn derivative(&self, x: f64) -> Result<f64> {
        let (i, t, h) = self.locate(x)?;
        Ok(Self::hermite(self.dg[i], self.ddg[i], self.dg[i + 1], self.ddg[i + 1], t, h))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }
}

/// The warping function `g` of a model manifold.
#[derive(Debug, Clone)]
pub enum WarpingFunction {
    /// `g(r) = r`.
    Flat,
    /// `g(r) = sinh(kappa r) / kappa`.
    Hyperbolic { kappa: f64 },
    /// Numerical solution of the Jacobi equation together with the
    /// curvature datum it came from.
    Numeric(Box<NumericWarping>, CurvatureProfile),
}

impl WarpingFunction {
    pub fn hyperbolic(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidInput(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        Ok(if kappa == 0.0 { WarpingFunction::Flat } else { WarpingFunction::Hyperbolic { kappa } })
    }

    /// Largest radius at which `g` may be evaluated.
    pub fn r_max(&self) -> f64 {
        match self {
            WarpingFunction::Numeric(n, _) => *n.r.last().unwrap(),
            _ => f64::INFINITY,
        }
    }

    /// First zero of `g` on `(0, r_max]`, if any.
    pub fn positivity_radius(&self) -> Option<f64> {
        match self {
            WarpingFunction::Numeric(n, _) => n.positivity_radius,
            _ => None,
        }
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        match self {
            WarpingFunction::Flat => Ok(r),
            WarpingFunction::Hyperbolic { kappa } => Ok((kappa * r).sinh() / kappa),
            WarpingFunction::Numeric(n, _) => n.value(r),
        }
    }

    pub fn derivative(&self, r: f64) -> Result<f64> {
        match self {
            WarpingFunction::Flat => Ok(1.0),
            WarpingFunction::Hyperbolic { kappa } => Ok((kappa * r).cosh()),
            WarpingFunction::Numeric(n, _) => n.derivative(r),
        }
    }

    /// `G(r) = g''/g`.
    pub fn curvature(&self, r: f64) -> Result<f64> {
        match self {
            WarpingFunction::Flat => Ok(0.0),
            WarpingFunction::Hyperbolic { kappa } => Ok(kappa * kappa),
            WarpingFunction::Numeric(_, c) => c.eval(r),
        }
    }

    /// `ln g(r)`, computed without overflow for large hyperbolic radii.
    pub fn ln_value(&self, r: f64) -> Result<f64> {
        match self {
            WarpingFunction::Flat => Ok(r.ln()),
            WarpingFunction::Hyperbolic { kappa } => {
                let x = kappa * r;
                if x > 20.0 {
                    Ok(x + (-(-2.0 * x).exp()).ln_1p() - (2.0 * kappa).ln())
                } else {
                    Ok((x.sinh() / kappa).ln())
                }
            }
            WarpingFunction::Numeric(..) => {
                let v = self.value(r)?;
                if v <= 0.0 {
                    return Err(Error::NonPositiveWarping(r));
                }
                Ok(v.ln())
            }
        }
    }

    /// `g'(r) / g(r)`.
    pub fn log_derivative(&self, r: f64) -> Result<f64> {
        match self {
            WarpingFunction::Flat => Ok(1.0 / r),
            WarpingFunction::Hyperbolic { kappa } => Ok(kappa / (kappa * r).tanh()),
            WarpingFunction::Numeric(..) => {
                let v = self.value(r)?;
                if v <= 0.0 {
                    return Err(Error::NonPositiveWarping(r));
                }
                Ok(self.derivative(r)? / v)
            }
        }
    }
}

/// Warping function for a curvature profile on `[0, r_max]`.
///
/// Constant profiles return the closed form; everything else goes through
/// [`integrate_jacobi`]. The result may vanish inside the interval, in which
/// case the first zero is recorded as the positivity radius. Use
/// [`solve_jacobi_positive`] to reject such profiles.
pub fn solve_jacobi(profile: &CurvatureProfile, r_max: f64, step: f64) -> Result<WarpingFunction> {
    if let CurvatureProfile::Constant(k) = profile {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidStep(step));
        }
        if !(r_max > 0.0) {
            return Err(Error::InvalidInput(format!("r_max must be positive, got {r_max}")));
        }
        return WarpingFunction::hyperbolic(*k);
    }
    integrate_jacobi(profile, r_max, step)
}

/// Integrates `g'' = G g`, `g(0) = 0`, `g'(0) = 1` on `[0, r_max]` with
/// classical RK4. The actual step is `r_max / ceil(r_max / step)`.
pub fn integrate_jacobi(profile: &CurvatureProfile, r_max: f64, step: f64) -> Result<WarpingFunction> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidStep(step));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidInput(format!("r_max must be positive, got {r_max}")));
    }
    if step > r_max {
        return Err(Error::InvalidStep(step));
    }
    if profile.domain_end() < r_max * (1.0 - 1e-12) {
        return Err(Error::OutOfDomain { r: r_max, r_max: profile.domain_end() });
    }
    let n = (r_max / step).ceil() as usize;
    let h = r_max / n as f64;
    let mut r = Vec::with_capacity(n + 1);
    let mut g = Vec::with_capacity(n + 1);
    let mut dg = Vec::with_capacity(n + 1);
    let mut ddg = Vec::with_capacity(n + 1);
    let (mut y, mut dy) = (0.0f64, 1.0f64);
    let curv = |x: f64| profile.eval(x.min(r_max));
    for k in 0..=n {
        let x = k as f64 * h;
        r.push(x);
        g.push(y);
        dg.push(dy);
        ddg.push(curv(x)? * y);
        if k == n {
            break;
        }
        let c0 = curv(x)?;
        let cm = curv(x + 0.5 * h)?;
        let c1 = curv(x + h)?;
        let k1 = (dy, c0 * y);
        let k2 = (dy + 0.5 * h * k1.1, cm * (y + 0.5 * h * k1.0));
        let k3 = (dy + 0.5 * h * k2.1, cm * (y + 0.5 * h * k2.0));
        let k4 = (dy + h * k3.1, c1 * (y + h * k3.0));
        y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        dy += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !y.is_finite() || !dy.is_finite() {
            return Err(Error::InvalidInput(format!("Jacobi solution overflowed at r = {}", x + h)));
        }
    }
    let mut nw = NumericWarping { r, g, dg, ddg, positivity_radius: None };
    nw.positivity_radius = first_zero(&nw);
    Ok(WarpingFunction::Numeric(Box::new(nw), profile.clone()))
}

/// Like [`solve_jacobi`], but fails with `NonPositiveWarping` if `g`
/// vanishes on `(0, r_max]`.
pub fn solve_jacobi_positive(profile: &CurvatureProfile, r_max: f64, step: f64) -> Result<WarpingFunction> {
    let w = solve_jacobi(profile, r_max, step)?;
    match w.positivity_radius() {
        Some(r0) => Err(Error::NonPositiveWarping(r0)),
        None => Ok(w),
    }
}

fn first_zero(nw: &NumericWarping) -> Option<f64> {
    let i = (1..nw.g.len()).find(|&i| nw.g[i] <= 0.0)?;
    let (mut lo, mut hi) = (nw.r[i - 1], nw.r[i]);
    if nw.g[i] == 0.0 && i > 0 {
        return Some(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        if nw.value(mid).unwrap_or(0.0) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Area of the unit sphere `S^{k}` in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area(k - 2) / (k as f64 - 1.0),
    }
}

/// A radial model `(R^m, dr^2 + g(r)^2 dtheta^2)` with exponent `p` and an
/// optional radial drift `f` in the weighted measure `e^{-f} dvol`.
#[derive(Debug, Clone)]
pub struct ModelManifold {
    m: usize,
    p: f64,
    warping: WarpingFunction,
    drift: Option<RadialFunction>,
}

impl ModelManifold {
    pub fn new(m: usize, p: f64, warping: WarpingFunction) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!("dimension m must be >= 2, got {m}")));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::UnsupportedExponent(p));
        }
        if let Some(r0) = warping.positivity_radius() {
            return Err(Error::NonPositiveWarping(r0));
        }
        Ok(ModelManifold { m, p, warping, drift: None })
    }

    pub fn flat(m: usize, p: f64) -> Result<Self> {
        Self::new(m, p, WarpingFunction::Flat)
    }

    pub fn hyperbolic(m: usize, p: f64, kappa: f64) -> Result<Self> {
        Self::new(m, p, WarpingFunction::hyperbolic(kappa)?)
    }

    pub fn with_drift(mut self, f: RadialFunction) -> Self {
        self.drift = Some(f);
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(m - 1) / (p - 1)`.
    pub fn alpha(&self) -> f64 {
        (self.m as f64 - 1.0) / (self.p - 1.0)
    }

    pub fn warping(&self) -> &WarpingFunction {
        &self.warping
    }

    pub fn drift(&self) -> Option<&RadialFunction> {
        self.drift.as_ref()
    }

    pub fn r_max(&self) -> f64 {
        self.warping.r_max()
    }

    pub fn drift_at(&self, r: f64) -> f64 {
        self.drift.as_ref().map_or(0.0, |f| f.eval(r))
    }

    /// Curvature constant when the model is flat or hyperbolic.
    pub fn kappa(&self) -> Option<f64> {
        match self.warping {
            WarpingFunction::Flat => Some(0.0),
            WarpingFunction::Hyperbolic { kappa } => Some(kappa),
            WarpingFunction::Numeric(..) => None,
        }
    }

    /// Radial density `sigma_{m-1} g(r)^{m-1} e^{-f(r)}` of the measure.
    pub fn measure(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        let lg = self.warping.ln_value(r)?;
        Ok(sphere_area(self.m - 1) * ((self.m as f64 - 1.0) * lg - self.drift_at(r)).exp())
    }
}

/// Coefficient of `d/dr` in the radial Laplacian: `(m - 1) g'/g`.
pub fn radial_laplacian_coeff(mm: &ModelManifold, r: f64) -> Result<f64> {
    if !(r > 0.0) || r > mm.r_max() {
        return Err(Error::OutOfDomain { r, r_max: mm.r_max() });
    }
    Ok((mm.m as f64 - 1.0) * mm.warping.log_derivative(r)?)
}
