use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The absorption term `F` of `Delta_p z + A z^{p-1} - B F(z) = 0`.
///
/// `F` is only ever evaluated on `t > 0`; it is extended by zero to the
/// negative axis, so the energy uses the primitive of `F(t_+)`.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    f: ScalarFn,
    df: Option<ScalarFn>,
    primitive: Option<ScalarFn>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Nonlinearity {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(name: impl Into<String>, f: F) -> Self {
        Nonlinearity { name: name.into(), f: Arc::new(f), df: None, primitive: None }
    }

    pub fn with_derivative<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, df: F) -> Self {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_primitive<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, prim: F) -> Self {
        self.primitive = Some(Arc::new(prim));
        self
    }

    /// `F(t) = t^sigma`.
    pub fn power(sigma: f64) -> Self {
        Nonlinearity::new(format!("t^{sigma}"), move |t| t.powf(sigma))
            .with_derivative(move |t| sigma * t.powf(sigma - 1.0))
            .with_primitive(move |t| t.powf(sigma + 1.0) / (sigma + 1.0))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t > 0.0 {
            (self.f)(t)
        } else {
            0.0
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        match &self.df {
            Some(df) => df(t),
            None => {
                let h = 1e-6 * t;
                ((self.f)(t + h) - (self.f)(t - h)) / (2.0 * h)
            }
        }
    }

    /// `\int_0^t F(s_+) ds`.
    pub fn primitive(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        match &self.primitive {
            Some(p) => p(t),
            None => quad::integrate(|s| (self.f)(s), 0.0, t, 1e-12, 0.0).0,
        }
    }

    /// `F(t) / t^{p-1}`.
    pub fn ratio(&self, t: f64, p: f64) -> f64 {
        self.eval(t) / t.powf(p - 1.0)
    }

    /// Smallest `t` with `F(t)/t^{p-1} >= c`, by bisection in `ln t`.
    pub fn level(&self, c: f64, p: f64) -> Result<f64> {
        let (mut lo, mut hi) = (-700.0f64, 700.0f64);
        if self.ratio(hi.exp(), p) < c {
            return Err(Error::BadNonlinearity(format!("F(t)/t^(p-1) never reaches {c}")));
        }
        if self.ratio(lo.exp(), p) >= c {
            return Ok(lo.exp());
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.ratio(mid.exp(), p) >= c {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi.exp())
    }

    /// Samples the structural assumptions on `F` on a log grid of
    /// `[1e-6, 1e6]`: `F(0) = 0`, `F > 0`, and `F(t)/t^{p-1}` strictly
    /// increasing from small to large.
    pub fn check(&self, p: f64) -> Result<()> {
        let f0 = (self.f)(0.0);
        if f0 != 0.0 && f0.is_finite() {
            return Err(Error::BadNonlinearity(format!("{}: F(0) = {f0}", self.name)));
        }
        let grid: Vec<f64> = (0..=120).map(|k| 10f64.powf(-6.0 + 0.1 * k as f64)).collect();
        let mut prev = f64::NEG_INFINITY;
        for &t in &grid {
            let v = (self.f)(t);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::BadNonlinearity(format!("{}: F({t:e}) = {v} is not positive", self.name)));
            }
            let q = v / t.powf(p - 1.0);
            if !(q > prev) {
                return Err(Error::BadNonlinearity(format!("{}: F(t)/t^(p-1) not increasing at t = {t:e}", self.name)));
            }
            prev = q;
        }
        let (first, last) = (self.ratio(grid[0], p), self.ratio(grid[grid.len() - 1], p));
        if last / first < 1e2 {
            return Err(Error::BadNonlinearity(format!("{}: F(t)/t^(p-1) is nearly flat", self.name)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_contract() {
        let f = Nonlinearity::power(3.0);
        assert!(f.check(2.0).is_ok());
        assert!(Nonlinearity::power(1.0).check(2.0).is_err());
        assert!((f.level(8.0, 2.0).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        let g = Nonlinearity::new("cube", |t| t * t * t);
        assert!((g.primitive(2.0) - 4.0).abs() < 1e-12);
        assert!((g.derivative(2.0) - 12.0).abs() < 1e-6);
        assert_eq!(g.eval(-1.0), 0.0);
    }
}
