//! Piecewise-linear finite elements on a radial interval with the model
//! measure, and the discrete variational objects built on them: the energy
//! `Q_V`, its derivative `Q'_V`, the Lagrangian and the Picone functional.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, RadialFunction, Table};
use crate::hardy::HardyWeight;
use crate::linalg::SymTridiag;
use crate::quad::{GAUSS4_W, GAUSS4_X};

/// Number of quadrature points per element.
pub const NQ: usize = 4;

/// Refinement ratio of graded meshes near the pole.
pub const GRADING_RATIO: f64 = 0.7;

#[inline]
fn shape0(q: usize) -> f64 {
    0.5 * (1.0 - GAUSS4_X[q])
}

#[inline]
fn shape1(q: usize) -> f64 {
    0.5 * (1.0 + GAUSS4_X[q])
}

/// `|x|^{q} sign(x)`, with `0 -> 0`.
#[inline]
pub fn spow(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(q).copysign(x)
    }
}

/// The radial density the mesh integrates against.
#[derive(Debug, Clone)]
pub enum Measure {
    /// `sigma_{m-1} g^{m-1} e^{-f}` of a model manifold.
    Model(ModelManifold),
    /// Lebesgue measure on an interval, for one-dimensional checks.
    Uniform,
}

impl Measure {
    fn density(&self, r: f64) -> Result<f64> {
        match self {
            Measure::Model(mm) => mm.measure(r),
            Measure::Uniform => Ok(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// No-flux condition, imposed weakly.
    Natural,
    /// Prescribed value.
    Essential,
}

/// P1 elements on `[r_0, r_n]` with 4-point Gauss quadrature per element.
#[derive(Debug, Clone)]
pub struct RadialMesh {
    p: f64,
    measure: Arc<Measure>,
    domain: Domain,
    nodes: Vec<f64>,
    qr: Vec<f64>,
    qw: Vec<f64>,
    elem_mass: Vec<f64>,
    inner: BoundaryKind,
    outer: BoundaryKind,
}

fn uniform_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    v[n] = b;
    v
}

impl RadialMesh {
    fn build(
        measure: Arc<Measure>,
        p: f64,
        nodes: Vec<f64>,
        domain: Domain,
        inner: BoundaryKind,
        outer: BoundaryKind,
    ) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::UnsupportedExponent(p));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidInput("mesh needs at least one element".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("mesh nodes must be finite and strictly increasing".into()));
        }
        if nodes[0] < 0.0 {
            return Err(Error::InvalidInput("radial mesh cannot extend below r = 0".into()));
        }
        if let Measure::Model(mm) = &*measure {
            let last = *nodes.last().unwrap();
            if last > mm.r_max() {
                return Err(Error::OutOfDomain { r: last, r_max: mm.r_max() });
            }
        }
        let ne = nodes.len() - 1;
        let mut qr = Vec::with_capacity(NQ * ne);
        let mut qw = Vec::with_capacity(NQ * ne);
        let mut elem_mass = Vec::with_capacity(ne);
        for e in 0..ne {
            let (a, b) = (nodes[e], nodes[e + 1]);
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            let mut s = 0.0;
            for q in 0..NQ {
                let r = c + h * GAUSS4_X[q];
                let w = h * GAUSS4_W[q] * measure.density(r)?;
                if !(w > 0.0) || !w.is_finite() {
                    return Err(Error::InvalidInput(format!("radial measure not positive and finite at r = {r}")));
                }
                qr.push(r);
                qw.push(w);
                s += w;
            }
            elem_mass.push(s);
        }
        Ok(RadialMesh { p, measure, domain, nodes, qr, qw, elem_mass, inner, outer })
    }

    /// Uniform mesh on the geodesic ball `B_R`. The pole is a free node.
    pub fn ball(mm: &ModelManifold, radius: f64, n: usize) -> Result<Self> {
        Self::ball_graded(mm, radius, n, 0)
    }

    /// Uniform mesh on `B_R` whose first element is further split
    /// geometrically with ratio 0.7 into `levels` extra elements.
    pub fn ball_graded(mm: &ModelManifold, radius: f64, n: usize, levels: usize) -> Result<Self> {
        check_count(n)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        let uni = uniform_nodes(0.0, radius, n);
        let mut nodes = vec![0.0];
        for k in (1..=levels).rev() {
            nodes.push(uni[1] * GRADING_RATIO.powi(k as i32));
        }
        nodes.extend_from_slice(&uni[1..]);
        Self::build(
            Arc::new(Measure::Model(mm.clone())),
            mm.p(),
            nodes,
            Domain::Ball { radius },
            BoundaryKind::Natural,
            BoundaryKind::Essential,
        )
    }

    /// Uniform mesh on the annulus `a < r < b`, both ends essential.
    pub fn annulus(mm: &ModelManifold, a: f64, b: f64, n: usize) -> Result<Self> {
        check_annulus(a, b, n)?;
        Self::build(
            Arc::new(Measure::Model(mm.clone())),
            mm.p(),
            uniform_nodes(a, b, n),
            Domain::Annulus { inner: a, outer: b },
            BoundaryKind::Essential,
            BoundaryKind::Essential,
        )
    }

    /// Annulus mesh uniform in `ln r`; suited to wide annuli.
    pub fn annulus_geometric(mm: &ModelManifold, a: f64, b: f64, n: usize) -> Result<Self> {
        check_annulus(a, b, n)?;
        if !(a > 0.0) {
            return Err(Error::InvalidInput("geometric spacing needs a positive inner radius".into()));
        }
        let mut nodes: Vec<f64> = uniform_nodes(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect();
        nodes[0] = a;
        nodes[n] = b;
        Self::build(
            Arc::new(Measure::Model(mm.clone())),
            mm.p(),
            nodes,
            Domain::Annulus { inner: a, outer: b },
            BoundaryKind::Essential,
            BoundaryKind::Essential,
        )
    }

    /// Interval `[a, b]` with unit weight and both ends essential.
    pub fn line(p: f64, a: f64, b: f64, n: usize) -> Result<Self> {
        check_annulus(a, b, n)?;
        Self::build(
            Arc::new(Measure::Uniform),
            p,
            uniform_nodes(a, b, n),
            Domain::Annulus { inner: a, outer: b },
            BoundaryKind::Essential,
            BoundaryKind::Essential,
        )
    }

    /// A mesh with the same measure on `[lo, hi]`: a ball when `lo = 0`.
    pub fn with_interval(&self, lo: f64, hi: f64, n: usize) -> Result<Self> {
        check_count(n)?;
        if !(hi > lo) || lo < 0.0 {
            return Err(Error::InvalidInput(format!("invalid interval [{lo}, {hi}]")));
        }
        let (domain, inner) = if lo == 0.0 && !matches!(*self.measure, Measure::Uniform) {
            (Domain::Ball { radius: hi }, BoundaryKind::Natural)
        } else {
            (Domain::Annulus { inner: lo, outer: hi }, BoundaryKind::Essential)
        };
        Self::build(self.measure.clone(), self.p, uniform_nodes(lo, hi, n), domain, inner, BoundaryKind::Essential)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn model(&self) -> Option<&ModelManifold> {
        match &*self.measure {
            Measure::Model(mm) => Some(mm),
            Measure::Uniform => None,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn inner_boundary(&self) -> BoundaryKind {
        self.inner
    }

    pub fn outer_boundary(&self) -> BoundaryKind {
        self.outer
    }

    pub fn inner_radius(&self) -> f64 {
        self.nodes[0]
    }

    pub fn outer_radius(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Indices `lo..hi` of the nodes that carry unknowns.
    pub fn free_range(&self) -> (usize, usize) {
        let lo = usize::from(self.inner == BoundaryKind::Essential);
        let hi = self.n_nodes() - usize::from(self.outer == BoundaryKind::Essential);
        (lo, hi.max(lo))
    }

    pub fn is_free(&self, i: usize) -> bool {
        let (lo, hi) = self.free_range();
        i >= lo && i < hi
    }

    /// Quadrature radii, `NQ` per element.
    pub fn quad_radii(&self) -> &[f64] {
        &self.qr
    }

    /// Quadrature weights including the radial measure.
    pub fn quad_weights(&self) -> &[f64] {
        &self.qw
    }

    /// `\int_e omega dr` for every element.
    pub fn element_measure(&self) -> &[f64] {
        &self.elem_mass
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    /// Smallest element length.
    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Total measure of the domain.
    pub fn volume(&self) -> f64 {
        self.elem_mass.iter().sum()
    }

    pub fn function(&self, values: Vec<f64>) -> Result<DiscreteFunction> {
        if values.len() != self.n_nodes() {
            return Err(Error::InvalidInput(format!("expected {} nodal values, got {}", self.n_nodes(), values.len())));
        }
        Ok(DiscreteFunction { values, inner: self.inner, outer: self.outer })
    }

    pub fn interpolate<F: Fn(f64) -> f64>(&self, f: F) -> DiscreteFunction {
        DiscreteFunction { values: self.nodes.iter().map(|&r| f(r)).collect(), inner: self.inner, outer: self.outer }
    }

    pub fn constant(&self, c: f64) -> DiscreteFunction {
        self.interpolate(|_| c)
    }

    /// Values of a nodal vector at the quadrature points.
    pub fn at_quad(&self, v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.qr.len());
        for e in 0..self.n_elements() {
            for q in 0..NQ {
                out.push(v[e] * shape0(q) + v[e + 1] * shape1(q));
            }
        }
        out
    }

    /// Element-wise constant derivatives of a nodal vector.
    pub fn slopes(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_elements()).map(|e| (v[e + 1] - v[e]) / self.element_length(e)).collect()
    }

    /// Value of the P1 interpolant at an arbitrary radius (clamped).
    pub fn eval_at(&self, v: &[f64], r: f64) -> f64 {
        let n = self.n_nodes();
        if r <= self.nodes[0] {
            return v[0];
        }
        if r >= self.nodes[n - 1] {
            return v[n - 1];
        }
        let i = self.nodes.partition_point(|&x| x <= r) - 1;
        let t = (r - self.nodes[i]) / self.element_length(i);
        v[i] + t * (v[i + 1] - v[i])
    }

    /// `\int |v|^p omega`.
    pub fn lp_norm_pow(&self, v: &[f64]) -> f64 {
        let p = self.p;
        self.at_quad(v).iter().zip(&self.qw).map(|(x, w)| x.abs().powf(p) * w).sum()
    }

    /// Stiffness matrix `\int c_e N_i' N_j' omega` with element coefficients `c`.
    pub fn stiffness(&self, coeff: Option<&[f64]>) -> SymTridiag {
        let mut k = SymTridiag::zeros(self.n_nodes());
        for e in 0..self.n_elements() {
            let h = self.element_length(e);
            let c = coeff.map_or(1.0, |c| c[e]) * self.elem_mass[e] / (h * h);
            k.diag[e] += c;
            k.diag[e + 1] += c;
            k.off[e] -= c;
        }
        k
    }

    /// Mass matrix `\int w N_i N_j omega` with `w` sampled at quadrature points.
    pub fn mass(&self, weight: Option<&[f64]>) -> SymTridiag {
        let mut m = SymTridiag::zeros(self.n_nodes());
        for e in 0..self.n_elements() {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for q in 0..NQ {
                let k = e * NQ + q;
                let w = self.qw[k] * weight.map_or(1.0, |v| v[k]);
                a += w * shape0(q) * shape0(q);
                b += w * shape0(q) * shape1(q);
                c += w * shape1(q) * shape1(q);
            }
            m.diag[e] += a;
            m.off[e] += b;
            m.diag[e + 1] += c;
        }
        m
    }

    /// `\int w N_i omega` for every node.
    pub fn load(&self, wq: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for e in 0..self.n_elements() {
            for q in 0..NQ {
                let k = e * NQ + q;
                out[e] += wq[k] * shape0(q) * self.qw[k];
                out[e + 1] += wq[k] * shape1(q) * self.qw[k];
            }
        }
        out
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("mesh needs at least one element".into()));
    }
    Ok(())
}

fn check_annulus(a: f64, b: f64, n: usize) -> Result<()> {
    check_count(n)?;
    if !(a >= 0.0) || !(b > a) || !b.is_finite() {
        return Err(Error::InvalidInput(format!("invalid annulus ({a}, {b})")));
    }
    Ok(())
}

/// Nodal values of a P1 function together with its boundary tags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteFunction {
    pub values: Vec<f64>,
    pub inner: BoundaryKind,
    pub outer: BoundaryKind,
}

impl DiscreteFunction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> DiscreteFunction {
        DiscreteFunction { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// Writes `r,value` rows.
    pub fn write_csv(&self, mesh: &RadialMesh, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["r", "value"])?;
        for (r, v) in mesh.nodes().iter().zip(&self.values) {
            w.write_record([format!("{r:.16e}"), format!("{v:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `r,value` rows and interpolates them onto the mesh nodes.
    pub fn read_csv(mesh: &RadialMesh, path: &Path) -> Result<DiscreteFunction> {
        let t = Table::from_csv(path)?;
        if mesh.inner_radius() < t.r[0] - 1e-12 || mesh.outer_radius() > t.r_max() + 1e-12 {
            return Err(Error::OutOfDomain { r: mesh.outer_radius(), r_max: t.r_max() });
        }
        Ok(mesh.interpolate(|r| t.eval_clamped(r)))
    }
}

/// A radial potential `V(r)`.
#[derive(Debug, Clone)]
pub enum PotentialProfile {
    Constant(f64),
    Tabulated(Table),
    Function(RadialFunction),
    /// `scale` times the sharp Hardy weight of a model.
    Hardy {
        model: ModelManifold,
        scale: f64,
    },
    /// `height (1 - ((r - center)/width)^2)^3` inside the window, else 0.
    Bump {
        center: f64,
        width: f64,
        height: f64,
    },
    /// The inner profile on `[lo, hi]`, zero elsewhere.
    Restricted {
        inner: Box<PotentialProfile>,
        lo: f64,
        hi: f64,
    },
    Scaled(f64, Box<PotentialProfile>),
    Sum(Vec<PotentialProfile>),
    PositivePart(Box<PotentialProfile>),
    NegativePart(Box<PotentialProfile>),
}

impl PotentialProfile {
    pub fn zero() -> Self {
        PotentialProfile::Constant(0.0)
    }

    pub fn hardy(model: &ModelManifold, scale: f64) -> Self {
        PotentialProfile::Hardy { model: model.clone(), scale }
    }

    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        PotentialProfile::Function(RadialFunction::new(f))
    }

    pub fn scaled(self, c: f64) -> Self {
        PotentialProfile::Scaled(c, Box::new(self))
    }

    pub fn plus(self, other: PotentialProfile) -> Self {
        match self {
            PotentialProfile::Sum(mut v) => {
                v.push(other);
                PotentialProfile::Sum(v)
            }
            s => PotentialProfile::Sum(vec![s, other]),
        }
    }

    pub fn restricted(self, lo: f64, hi: f64) -> Self {
        PotentialProfile::Restricted { inner: Box::new(self), lo, hi }
    }

    pub fn positive_part(self) -> Self {
        PotentialProfile::PositivePart(Box::new(self))
    }

    pub fn negative_part(self) -> Self {
        PotentialProfile::NegativePart(Box::new(self))
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        Ok(match self {
            PotentialProfile::Constant(c) => *c,
            PotentialProfile::Tabulated(t) => t.eval_clamped(r),
            PotentialProfile::Function(f) => f.eval(r),
            PotentialProfile::Hardy { model, scale } => {
                if *scale == 0.0 {
                    0.0
                } else {
                    scale * crate::hardy::chi_general(model, r)?
                }
            }
            PotentialProfile::Bump { center, width, height } => bump(r, *center, *width, *height),
            PotentialProfile::Restricted { inner, lo, hi } => {
                if r >= *lo && r <= *hi {
                    inner.eval(r)?
                } else {
                    0.0
                }
            }
            PotentialProfile::Scaled(c, inner) => c * inner.eval(r)?,
            PotentialProfile::Sum(v) => {
                let mut s = 0.0;
                for p in v {
                    s += p.eval(r)?;
                }
                s
            }
            PotentialProfile::PositivePart(inner) => inner.eval(r)?.max(0.0),
            PotentialProfile::NegativePart(inner) => (-inner.eval(r)?).max(0.0),
        })
    }

    /// Values at many radii; Hardy terms share the Green integral work.
    pub fn sample(&self, radii: &[f64]) -> Result<Vec<f64>> {
        match self {
            PotentialProfile::Hardy { model, scale } => {
                if *scale == 0.0 {
                    return Ok(vec![0.0; radii.len()]);
                }
                let hw = HardyWeight::new(model)?;
                Ok(hw.values_at(radii)?.into_iter().map(|v| scale * v).collect())
            }
            PotentialProfile::Restricted { inner, lo, hi } => {
                let idx: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] >= *lo && radii[i] <= *hi).collect();
                let sub: Vec<f64> = idx.iter().map(|&i| radii[i]).collect();
                let vals = inner.sample(&sub)?;
                let mut out = vec![0.0; radii.len()];
                for (k, &i) in idx.iter().enumerate() {
                    out[i] = vals[k];
                }
                Ok(out)
            }
            PotentialProfile::Scaled(c, inner) => Ok(inner.sample(radii)?.into_iter().map(|v| c * v).collect()),
            PotentialProfile::Sum(v) => {
                let mut out = vec![0.0; radii.len()];
                for p in v {
                    for (o, x) in out.iter_mut().zip(p.sample(radii)?) {
                        *o += x;
                    }
                }
                Ok(out)
            }
            PotentialProfile::PositivePart(inner) => Ok(inner.sample(radii)?.into_iter().map(|v| v.max(0.0)).collect()),
            PotentialProfile::NegativePart(inner) => {
                Ok(inner.sample(radii)?.into_iter().map(|v| (-v).max(0.0)).collect())
            }
            _ => radii.iter().map(|&r| self.eval(r)).collect(),
        }
    }

    /// Values at the quadrature points of a mesh.
    pub fn on_mesh(&self, mesh: &RadialMesh) -> Result<Vec<f64>> {
        self.sample(mesh.quad_radii())
    }

    /// Values at the nodes of a mesh.
    pub fn on_nodes(&self, mesh: &RadialMesh) -> Result<Vec<f64>> {
        self.sample(mesh.nodes())
    }
}

/// Smooth compactly supported bump `height (1 - x^2)^3`, `x = (r - c)/w`.
pub fn bump(r: f64, center: f64, width: f64, height: f64) -> f64 {
    let x = (r - center) / width;
    if x.abs() >= 1.0 {
        0.0
    } else {
        height * (1.0 - x * x).powi(3)
    }
}

fn check_potential(mesh: &RadialMesh, vq: &[f64], fq: &[f64]) -> Result<()> {
    for (k, (v, f)) in vq.iter().zip(fq).enumerate() {
        if !v.is_finite() && *f != 0.0 {
            return Err(Error::SingularPotential(mesh.qr[k]));
        }
    }
    Ok(())
}

#[inline]
fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// `Q_V(phi)` with `V` already sampled at the quadrature points.
pub fn energy_sampled(mesh: &RadialMesh, vq: &[f64], phi: &[f64]) -> Result<f64> {
    let p = mesh.p;
    let fq = mesh.at_quad(phi);
    check_potential(mesh, vq, &fq)?;
    let grad: f64 = mesh.slopes(phi).iter().zip(&mesh.elem_mass).map(|(d, w)| d.abs().powf(p) * w).sum();
    let pot: f64 = fq
        .iter()
        .zip(vq)
        .zip(&mesh.qw)
        .filter(|((f, _), _)| **f != 0.0)
        .map(|((f, v), w)| v * f.abs().powf(p) * w)
        .sum();
    Ok((grad - pot) / p)
}

/// `R_i = Q'_V(w)[N_i]` for every node, and the magnitude `S_i` of the
/// terms summed into it (used to scale residuals).
pub fn residual_sampled(mesh: &RadialMesh, vq: &[f64], w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = mesh.p;
    let fq = mesh.at_quad(w);
    check_potential(mesh, vq, &fq)?;
    let n = mesh.n_nodes();
    let mut res = vec![0.0; n];
    let mut mag = vec![0.0; n];
    for e in 0..mesh.n_elements() {
        let h = mesh.element_length(e);
        let flux = spow((w[e + 1] - w[e]) / h, p - 1.0) * mesh.elem_mass[e] / h;
        res[e] -= flux;
        res[e + 1] += flux;
        // Floor well above the rounding error of the flux, so that nearly
        // flat stretches of `w` do not divide rounding noise by ~0.
        let big = w[e].abs().max(w[e + 1].abs()) / h;
        let slope = ((w[e + 1] - w[e]) / h).abs().max(1e-8 * big);
        let floor = 1e-3 * (p - 1.0) * slope.powf(p - 2.0) * big * mesh.elem_mass[e] / h;
        mag[e] += flux.abs() + floor;
        mag[e + 1] += flux.abs() + floor;
        for q in 0..NQ {
            let k = e * NQ + q;
            let t = finite_or_zero(vq[k]) * spow(fq[k], p - 1.0) * mesh.qw[k];
            res[e] -= t * shape0(q);
            res[e + 1] -= t * shape1(q);
            mag[e] += (t * shape0(q)).abs();
            mag[e + 1] += (t * shape1(q)).abs();
        }
    }
    Ok((res, mag))
}

/// `Q_V(phi) = (1/p)[\int |phi'|^p omega - \int V |phi|^p omega]`.
pub fn qv_energy(mesh: &RadialMesh, v: &PotentialProfile, phi: &DiscreteFunction) -> Result<f64> {
    energy_sampled(mesh, &v.on_mesh(mesh)?, &phi.values)
}

/// The weak pairing `Q'_V(w)[phi]`.
pub fn qv_residual(
    mesh: &RadialMesh,
    v: &PotentialProfile,
    w: &DiscreteFunction,
    phi: &DiscreteFunction,
) -> Result<f64> {
    let (res, _) = residual_sampled(mesh, &v.on_mesh(mesh)?, &w.values)?;
    Ok(res.iter().zip(&phi.values).map(|(r, f)| r * f).sum())
}

/// Residual of `w` against every nodal basis function.
pub fn qv_residual_vector(mesh: &RadialMesh, v: &PotentialProfile, w: &DiscreteFunction) -> Result<Vec<f64>> {
    Ok(residual_sampled(mesh, &v.on_mesh(mesh)?, &w.values)?.0)
}

/// Pointwise Lagrangian `L(phi, g)` from values and derivatives.
#[inline]
pub fn lagrangian_density(p: f64, phi: f64, dphi: f64, g: f64, dg: f64) -> f64 {
    let t = phi / g;
    dphi.abs().powf(p) + (p - 1.0) * t.abs().powf(p) * dg.abs().powf(p)
        - p * spow(t, p - 1.0) * spow(dg, p - 1.0) * dphi
}

/// `\int L(phi, g) omega`.
pub fn lagrangian(mesh: &RadialMesh, phi: &DiscreteFunction, g: &DiscreteFunction) -> Result<f64> {
    if let Some((i, &v)) = g.values.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveG { node: i, value: v });
    }
    let p = mesh.p;
    let (fq, gq) = (mesh.at_quad(&phi.values), mesh.at_quad(&g.values));
    let (df, dg) = (mesh.slopes(&phi.values), mesh.slopes(&g.values));
    let mut s = 0.0;
    for e in 0..mesh.n_elements() {
        for q in 0..NQ {
            let k = e * NQ + q;
            s += lagrangian_density(p, fq[k], df[e], gq[k], dg[e]) * mesh.qw[k];
        }
    }
    Ok(s)
}

/// `\int L(phi, g) omega` with `g` and `g'` given at the quadrature points.
pub fn lagrangian_sampled(mesh: &RadialMesh, phi: &DiscreteFunction, gq: &[f64], dgq: &[f64]) -> Result<f64> {
    if gq.len() != mesh.qr.len() || dgq.len() != mesh.qr.len() {
        return Err(Error::InvalidInput("g must be sampled at the quadrature points".into()));
    }
    if let Some(k) = gq.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveG { node: k / NQ, value: gq[k] });
    }
    let fq = mesh.at_quad(&phi.values);
    let df = mesh.slopes(&phi.values);
    Ok((0..fq.len()).map(|k| lagrangian_density(mesh.p, fq[k], df[k / NQ], gq[k], dgq[k]) * mesh.qw[k]).sum())
}

/// Largest admissible ratio between the two arguments of [`picone`].
pub const MAX_RATIO: f64 = 1e12;

/// Picone functional
/// `I(w, z) = \int |w'|^{p-2} w' ((w^p - z^p)/w^{p-1})' - \int |z'|^{p-2} z' ((w^p - z^p)/z^{p-1})'`.
pub fn picone(mesh: &RadialMesh, w: &DiscreteFunction, z: &DiscreteFunction) -> Result<f64> {
    for i in 0..mesh.n_nodes() {
        let (a, b) = (w.values[i], z.values[i]);
        if !(a > 0.0) || !(b > 0.0) || a / b > MAX_RATIO || b / a > MAX_RATIO {
            return Err(Error::UnboundedRatio(i));
        }
    }
    let p = mesh.p;
    let (wq, zq) = (mesh.at_quad(&w.values), mesh.at_quad(&z.values));
    let (dw, dz) = (mesh.slopes(&w.values), mesh.slopes(&z.values));
    let mut s = 0.0;
    for e in 0..mesh.n_elements() {
        for q in 0..NQ {
            let k = e * NQ + q;
            // ((w^p - z^p)/w^{p-1})' = w' - p (z/w)^{p-1} z' + (p-1)(z/w)^p w'
            let t = zq[k] / wq[k];
            let a = spow(dw[e], p - 1.0) * (dw[e] - p * t.powf(p - 1.0) * dz[e] + (p - 1.0) * t.powf(p) * dw[e]);
            let u = wq[k] / zq[k];
            let b = spow(dz[e], p - 1.0) * (dz[e] - p * u.powf(p - 1.0) * dw[e] + (p - 1.0) * u.powf(p) * dz[e]);
            s += (a + b) * mesh.qw[k];
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn line_energy_of_sine() {
        let mesh = RadialMesh::line(2.0, 1.0, 2.0, 2000).unwrap();
        let phi = mesh.interpolate(|r| (PI * (r - 1.0)).sin());
        let e = qv_energy(&mesh, &PotentialProfile::zero(), &phi).unwrap();
        assert!((e - PI * PI / 4.0).abs() < 1e-5);
    }

    #[test]
    fn constants_have_zero_residual() {
        let mm = ModelManifold::hyperbolic(3, 2.5, 1.0).unwrap();
        let mesh = RadialMesh::ball(&mm, 3.0, 50).unwrap();
        let w = mesh.constant(2.0);
        let r = qv_residual_vector(&mesh, &PotentialProfile::zero(), &w).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn graded_ball_refines_towards_pole() {
        let mm = ModelManifold::flat(3, 2.0).unwrap();
        let mesh = RadialMesh::ball_graded(&mm, 1.0, 10, 5).unwrap();
        assert_eq!(mesh.n_elements(), 15);
        assert!((mesh.nodes()[1] - 0.1 * 0.7f64.powi(5)).abs() < 1e-15);
        assert!((mesh.volume() - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lagrangian_vanishes_on_multiples() {
        let mm = ModelManifold::flat(3, 3.0).unwrap();
        let mesh = RadialMesh::annulus(&mm, 1.0, 2.0, 100).unwrap();
        let g = mesh.interpolate(|r| 1.0 + r * r);
        let phi = g.map(|v| 2.5 * v);
        assert!(lagrangian(&mesh, &phi, &g).unwrap().abs() < 1e-10);
    }

    #[test]
    fn picone_rejects_zero() {
        let mesh = RadialMesh::line(2.0, 0.0, 1.0, 4).unwrap();
        let w = mesh.interpolate(|r| r);
        let z = mesh.constant(1.0);
        assert!(matches!(picone(&mesh, &w, &z), Err(Error::UnboundedRatio(0))));
    }
}
