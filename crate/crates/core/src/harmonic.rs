use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GraphDomain;
use crate::quadrature::{ball_integral, QuadratureSpec};
use crate::space::{lift, point2, point3, Mat3, Region, Rescaled, Vec2, Vec3, VERT};

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Mat3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    ExactPoly { degree: usize },
    Polynomial,
    Mfs { charges: usize },
    Simon { epsilon: f64 },
    Rescaled,
    Pushforward,
    Extension,
}

pub trait Field: Send + Sync {
    fn dim(&self) -> usize;
    fn jet(&self, p: &Vec3) -> Jet;
    fn provenance(&self) -> Provenance;

    fn value(&self, p: &Vec3) -> f64 {
        self.jet(p).value
    }

    fn grad(&self, p: &Vec3) -> Vec3 {
        self.jet(p).grad
    }
}

impl<F: Field + ?Sized> Field for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn jet(&self, p: &Vec3) -> Jet {
        (**self).jet(p)
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
    fn value(&self, p: &Vec3) -> f64 {
        (**self).value(p)
    }
    fn grad(&self, p: &Vec3) -> Vec3 {
        (**self).grad(p)
    }
}

/// Central-difference Laplacian with step `h`.
pub fn fd_laplacian(field: &dyn Field, p: &Vec3, h: f64) -> f64 {
    let axes: &[usize] = if field.dim() == 2 { &[0, 2] } else { &[0, 1, 2] };
    let u0 = field.value(p);
    axes.iter()
        .map(|&k| {
            let mut e = Vec3::zeros();
            e[k] = h;
            (field.value(&(p + e)) - 2.0 * u0 + field.value(&(p - e))) / (h * h)
        })
        .sum()
}

/// Sparse polynomial in the embedded coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(f64, [u32; 3])>,
    degree: Option<usize>,
}

fn ipow(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, [u32; 3])>) -> Self {
        Self { dim, terms, degree: None }
    }

    /// `Im((x + i y)^k)` in the plane.
    pub fn im_z(k: usize) -> Self {
        let mut terms = Vec::new();
        for j in (1..=k).step_by(2) {
            let sign = if (j - 1) / 2 % 2 == 0 { 1.0 } else { -1.0 };
            terms.push((sign * binomial(k, j), [(k - j) as u32, 0, j as u32]));
        }
        Self { dim: 2, terms, degree: Some(k) }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, vec![(c, [0, 0, 0])])
    }

    pub fn scale(mut self, c: f64) -> Self {
        for t in &mut self.terms {
            t.0 *= c;
        }
        self.degree = None;
        self
    }

    pub fn add(mut self, other: Polynomial) -> Self {
        self.terms.extend(other.terms);
        self.degree = None;
        self
    }
}

impl Field for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, p: &Vec3) -> Jet {
        let mut value = 0.0;
        let mut grad = Vec3::zeros();
        let mut hess = Mat3::zeros();
        for (c, e) in &self.terms {
            let pw = |i: usize, d: u32| -> f64 {
                if e[i] < d {
                    0.0
                } else {
                    let fall = (0..d).fold(1.0, |a, k| a * (e[i] - k) as f64);
                    fall * ipow(p[i], e[i] - d)
                }
            };
            let base = [pw(0, 0), pw(1, 0), pw(2, 0)];
            let d1 = [pw(0, 1), pw(1, 1), pw(2, 1)];
            let d2 = [pw(0, 2), pw(1, 2), pw(2, 2)];
            value += c * base[0] * base[1] * base[2];
            for i in 0..3 {
                let mut g = *c * d1[i];
                for k in 0..3 {
                    if k != i {
                        g *= base[k];
                    }
                }
                grad[i] += g;
                for j in 0..3 {
                    let mut h = *c;
                    for k in 0..3 {
                        h *= if i == j && k == i {
                            d2[k]
                        } else if k == i || k == j {
                            d1[k]
                        } else {
                            base[k]
                        };
                    }
                    hess[(i, j)] += h;
                }
            }
        }
        Jet { value, grad, hess }
    }

    fn provenance(&self) -> Provenance {
        match self.degree {
            Some(degree) => Provenance::ExactPoly { degree },
            None => Provenance::Polynomial,
        }
    }
}

/// Homogeneous harmonic polynomial of degree `k` vanishing on `{x_d = 0}`.
pub fn exact_polynomial(dim: usize, k: usize) -> Result<Polynomial> {
    if k == 0 {
        return Err(Error::Domain("degree must be at least 1".into()));
    }
    match dim {
        2 => Ok(Polynomial::im_z(k)),
        3 => {
            let terms: Vec<(f64, [u32; 3])> = match k {
                1 => vec![(1.0, [0, 0, 1])],
                2 => vec![(1.0, [1, 0, 1])],
                3 => vec![(3.0, [2, 0, 1]), (-1.0, [0, 0, 3])],
                4 => vec![(1.0, [3, 0, 1]), (-1.0, [1, 0, 3])],
                _ => return Err(Error::Domain(format!("closed forms in d=3 stop at degree 4, got {k}"))),
            };
            Ok(Polynomial { dim: 3, terms, degree: Some(k) })
        }
        _ => Err(Error::Domain(format!("dimension must be 2 or 3, got {dim}"))),
    }
}

/// `u = xy + sin^2(eps z)` on all of `R^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimonField {
    pub epsilon: f64,
}

impl Field for SimonField {
    fn dim(&self) -> usize {
        3
    }

    fn jet(&self, p: &Vec3) -> Jet {
        let e = self.epsilon;
        let s = (e * p.z).sin();
        let value = p.x * p.y + s * s;
        let grad = Vec3::new(p.y, p.x, e * (2.0 * e * p.z).sin());
        let mut hess = Mat3::zeros();
        hess[(0, 1)] = 1.0;
        hess[(1, 0)] = 1.0;
        hess[(2, 2)] = 2.0 * e * e * (2.0 * e * p.z).cos();
        Jet { value, grad, hess }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Simon { epsilon: self.epsilon }
    }
}

impl SimonField {
    /// Coefficient matrix with off-diagonal `-(g^2)''/2`.
    pub fn coefficient(&self, z: f64) -> Mat3 {
        let e = self.epsilon;
        let c = -e * e * (2.0 * e * z).cos();
        let mut a = Mat3::identity();
        a[(0, 1)] = c;
        a[(1, 0)] = c;
        a
    }

    /// `div(A grad u)` expanded symbolically; `A` depends on `z` only, through the `xy` block.
    pub fn divergence_residual(&self, p: &Vec3) -> f64 {
        let a = self.coefficient(p.z);
        (a * self.jet(p).hess).trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedPoint {
    pub point: Vec3,
    pub k: i64,
    pub singular: bool,
}

#[derive(Debug, Clone)]
pub struct SimonFixture {
    pub field: SimonField,
    pub critical: Vec<PredictedPoint>,
}

impl SimonFixture {
    pub fn singular(&self) -> impl Iterator<Item = &PredictedPoint> {
        self.critical.iter().filter(|p| p.singular)
    }
}

/// Field, coefficients and predicted critical/singular points with `|z| <= z_max`.
pub fn simon_fixture(epsilon: f64, z_max: f64) -> Result<SimonFixture> {
    if !(2.0 * epsilon * epsilon < 0.25) {
        return Err(Error::Precondition(format!("need 2 eps^2 < 1/4, got eps = {epsilon}")));
    }
    let step = PI / (2.0 * epsilon);
    let kmax = (z_max / step + 1e-12).floor() as i64;
    let critical = (-kmax..=kmax)
        .map(|k| PredictedPoint { point: point3(0.0, 0.0, k as f64 * step), k, singular: k % 2 == 0 })
        .collect();
    Ok(SimonFixture { field: SimonField { epsilon }, critical })
}

/// Settings for the fundamental-solution fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfsSpec {
    /// Radius of the fitting window centred at the origin.
    pub window: f64,
    pub charges: usize,
    /// Charge distance from the boundary, relative to `window`.
    pub offset: f64,
    pub boundary_tol: f64,
    pub collocation_ratio: usize,
    pub rank_tol: f64,
}

impl Default for MfsSpec {
    fn default() -> Self {
        Self { window: 1.0, charges: 400, offset: 0.08, boundary_tol: 1e-6, collocation_ratio: 4, rank_tol: 1e-12 }
    }
}

/// Superposition of fundamental solutions with poles outside the domain.
#[derive(Debug, Clone)]
pub struct MfsField {
    dim: usize,
    charges: Vec<Vec3>,
    weights: Vec<f64>,
    constant: f64,
    pub window: f64,
    pub rank: usize,
    pub boundary_residual: f64,
}

impl MfsField {
    pub fn charges(&self) -> &[Vec3] {
        &self.charges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn kernel(dim: usize, d: &Vec3) -> f64 {
    if dim == 2 {
        0.5 * d.norm_squared().ln()
    } else {
        1.0 / d.norm()
    }
}

impl Field for MfsField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, p: &Vec3) -> f64 {
        self.constant + self.charges.iter().zip(&self.weights).map(|(c, w)| w * kernel(self.dim, &(p - c))).sum::<f64>()
    }

    fn grad(&self, p: &Vec3) -> Vec3 {
        let mut g = Vec3::zeros();
        for (c, w) in self.charges.iter().zip(&self.weights) {
            let d = p - c;
            let r2 = d.norm_squared();
            g += if self.dim == 2 { *w / r2 * d } else { -*w / (r2 * r2.sqrt()) * d };
        }
        g
    }

    fn jet(&self, p: &Vec3) -> Jet {
        let mut value = self.constant;
        let mut grad = Vec3::zeros();
        let mut hess = Mat3::zeros();
        for (c, w) in self.charges.iter().zip(&self.weights) {
            let d = p - c;
            let r2 = d.norm_squared();
            if self.dim == 2 {
                value += w * 0.5 * r2.ln();
                grad += *w / r2 * d;
                let mut h = Mat3::zeros();
                for &i in &[0usize, 2] {
                    for &j in &[0usize, 2] {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[(i, j)] = (delta * r2 - 2.0 * d[i] * d[j]) / (r2 * r2);
                    }
                }
                hess += *w * h;
            } else {
                let r = r2.sqrt();
                value += w / r;
                grad += -*w / (r2 * r) * d;
                hess += *w * (3.0 * d * d.transpose() - r2 * Mat3::identity()) / (r2 * r2 * r);
            }
        }
        Jet { value, grad, hess }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Mfs { charges: self.charges.len() }
    }
}

fn fibonacci_cap(n: usize, min_cos: f64) -> Vec<Vec3> {
    // Directions on the sphere with polar cosine in [min_cos, 1].
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (1.0 - min_cos) * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let t = golden * i as f64;
            Vec3::new(rho * t.cos(), rho * t.sin(), z)
        })
        .collect()
}

/// Where the graph leaves the ball of radius `rho` along the unit tangential direction `e`.
fn graph_exit(domain: &GraphDomain, e: &Vec2, rho: f64) -> f64 {
    let f = |t: f64| (domain.boundary_point(&(t * e))).norm() - rho;
    let (mut lo, mut hi) = (0.0, rho);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Samples of the two boundary pieces of `D cap B_rho`: graph points (with inward normals) and arc points.
fn boundary_samples(domain: &GraphDomain, rho: f64, n: usize) -> (Vec<(Vec3, Vec3)>, Vec<Vec3>) {
    let dim = domain.dim();
    let mut graph = Vec::new();
    let mut arc = Vec::new();
    if dim == 2 {
        let xr = graph_exit(domain, &Vec2::new(1.0, 0.0), rho);
        let xl = graph_exit(domain, &Vec2::new(-1.0, 0.0), rho);
        let ng = n / 2;
        for i in 0..ng {
            let t = -1.0 + 2.0 * (i as f64 + 0.5) / ng as f64;
            let x = Vec2::new(if t >= 0.0 { t * xr } else { t * xl }, 0.0);
            graph.push((domain.boundary_point(&x), domain.normal(&x)));
        }
        let yr = domain.phi(&Vec2::new(xr, 0.0));
        let yl = domain.phi(&Vec2::new(-xl, 0.0));
        let a0 = yr.atan2(xr);
        let a1 = yl.atan2(-xl);
        let na = n - ng;
        for i in 0..na {
            let a = a0 + (a1 - a0) * (i as f64 + 0.5) / na as f64;
            arc.push(point2(rho * a.cos(), rho * a.sin()));
        }
    } else {
        let ng = n / 2;
        let rings = ((ng as f64).sqrt() / 1.2).ceil() as usize;
        let mut count = 0;
        for k in 0..rings {
            let frac = (k as f64 + 0.5) / rings as f64;
            let per = ((2.0 * PI * frac * rings as f64).round() as usize).max(3);
            for j in 0..per {
                let psi = 2.0 * PI * (j as f64 + 0.5 * (k % 2) as f64) / per as f64;
                let e = Vec2::new(psi.cos(), psi.sin());
                let t = frac * graph_exit(domain, &e, rho);
                let x = t * e;
                graph.push((domain.boundary_point(&x), domain.normal(&x)));
                count += 1;
            }
        }
        let na = n.saturating_sub(count).max(n / 2);
        for w in fibonacci_cap(na * 2, -1.0) {
            let x = rho * w;
            if domain.level(&x) > 0.0 {
                arc.push(x);
            }
        }
    }
    (graph, arc)
}

/// Least-squares fit of a field vanishing on the graph with trace `data` on the window arc.
pub fn solve_mfs(domain: &GraphDomain, spec: &MfsSpec, data: &dyn Fn(&Vec3) -> f64) -> Result<MfsField> {
    let dim = domain.dim();
    let rho = spec.window;
    let off = spec.offset * rho;
    if !(rho > 0.0 && off > 0.0) || spec.charges < 4 {
        return Err(Error::Precondition("window, offset and charge count must be positive".into()));
    }
    let (src_graph, src_arc) = boundary_samples(domain, rho + off, spec.charges);
    let mut charges: Vec<Vec3> = src_graph.iter().map(|(x, n)| x - off * n).collect();
    for x in &src_arc {
        charges.push(x * 1.0);
    }
    let (col_graph, col_arc) = boundary_samples(domain, rho, spec.charges * spec.collocation_ratio);
    let n = charges.len() + usize::from(dim == 2);
    let rows: Vec<(Vec3, f64, f64)> = col_graph
        .iter()
        .map(|(x, _)| (*x, 0.0, 4.0))
        .chain(col_arc.iter().map(|x| (*x, data(x), 1.0)))
        .collect();
    let m = rows.len();
    let mut a = DMatrix::<f64>::zeros(m, n);
    let mut b = DVector::<f64>::zeros(m);
    for (i, (x, val, w)) in rows.iter().enumerate() {
        for (j, c) in charges.iter().enumerate() {
            a[(i, j)] = w * kernel(dim, &(x - c));
        }
        if dim == 2 {
            a[(i, n - 1)] = *w;
        }
        b[i] = w * val;
    }
    if b.amax() == 0.0 {
        return Err(Error::Trivial("boundary data vanish identically; the fitted field is zero".into()));
    }
    // Column scaling keeps the truncation threshold meaningful.
    let scales: Vec<f64> = (0..n).map(|j| a.column(j).norm().max(1e-300)).collect();
    for j in 0..n {
        let s = scales[j];
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let cut = spec.rank_tol * smax;
    let u = svd.u.as_ref().ok_or_else(|| Error::Solver("SVD failed".into()))?;
    let vt = svd.v_t.as_ref().ok_or_else(|| Error::Solver("SVD failed".into()))?;
    let mut coef = DVector::<f64>::zeros(n);
    let mut rank = 0;
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > cut {
            rank += 1;
            let proj = u.column(k).dot(&b) / s;
            coef += proj * vt.row(k).transpose();
        }
    }
    if rank < n.min(4) {
        return Err(Error::Solver(format!("numerical rank {rank} of {n}: use fewer charges or a larger offset")));
    }
    let weights: Vec<f64> = (0..charges.len()).map(|j| coef[j] / scales[j]).collect();
    let constant = if dim == 2 { coef[n - 1] / scales[n - 1] } else { 0.0 };
    let mut field = MfsField { dim, charges, weights, constant, window: rho, rank, boundary_residual: 0.0 };
    let radius = domain.radius.min(rho / 2.0);
    field.boundary_residual = boundary_residual(&field, domain, 2.0 * radius)?;
    if field.boundary_residual > spec.boundary_tol {
        return Err(Error::Quality(format!(
            "boundary residual {:.3e} exceeds tolerance {:.1e}",
            field.boundary_residual, spec.boundary_tol
        )));
    }
    Ok(field)
}

/// `max |u|` on the graph inside `B_rho` relative to the RMS of `u` over `D cap B_rho`.
pub fn boundary_residual(field: &dyn Field, domain: &GraphDomain, rho: f64) -> Result<f64> {
    let dim = domain.dim();
    let (graph, _) = boundary_samples(domain, rho, if dim == 2 { 400 } else { 1600 });
    let bmax = graph.iter().map(|(x, _)| field.value(x).abs()).fold(0.0, f64::max);
    let spec = QuadratureSpec { tol: 1e-6, ..Default::default() };
    let origin = Vec3::zeros();
    let mass = ball_integral(domain, &origin, rho, &spec, |x| field.value(x).powi(2))?.value;
    let vol = ball_integral(domain, &origin, rho, &spec, |_| 1.0)?.value;
    let rms = (mass / vol).sqrt();
    if !(rms > 1e-300) {
        return Err(Error::Trivial("field vanishes on the window".into()));
    }
    Ok(bmax / rms)
}

/// Graph-adapted version of a trace: `u(x, x_d - phi(x))`, which vanishes at the window corners.
pub fn graph_adapted<'a>(domain: &'a GraphDomain, f: &'a dyn Field) -> impl Fn(&Vec3) -> f64 + 'a {
    move |x: &Vec3| {
        let t = crate::space::tangential(x);
        f.value(&lift(&t, x[VERT] - domain.phi(&t)))
    }
}

/// `T_{X,r} u(Y) = (u(X + rY) - u(X)) / (r^{-d} int_{B_r(X) cap D} |u - u(X)|^2)^{1/2}`.
pub struct RescaledField<F: Field> {
    pub base: F,
    pub center: Vec3,
    pub scale: f64,
    pub norm: f64,
    base_value: f64,
}

pub fn rescale<F: Field>(base: F, region: &dyn Region, center: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<RescaledField<F>> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {r}")));
    }
    let u0 = base.value(center);
    let e = ball_integral(region, center, r, spec, |x| (base.value(x) - u0).powi(2))?;
    let mean = e.value / r.powi(region.dim() as i32);
    let norm = mean.sqrt();
    if !(norm > 1e-150 * (1.0 + u0.abs())) {
        return Err(Error::Degenerate("u is constant on the ball; the rescaling is undefined".into()));
    }
    Ok(RescaledField { base, center: *center, scale: r, norm, base_value: u0 })
}

impl<F: Field> RescaledField<F> {
    /// The blown-up domain `(D - X) / r`.
    pub fn region<'a>(&self, region: &'a dyn Region) -> Rescaled<'a> {
        Rescaled { inner: region, center: self.center, scale: self.scale }
    }
}

impl<F: Field> Field for RescaledField<F> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, y: &Vec3) -> f64 {
        (self.base.value(&(self.center + self.scale * y)) - self.base_value) / self.norm
    }

    fn jet(&self, y: &Vec3) -> Jet {
        let j = self.base.jet(&(self.center + self.scale * y));
        Jet {
            value: (j.value - self.base_value) / self.norm,
            grad: j.grad * (self.scale / self.norm),
            hess: j.hess * (self.scale * self.scale / self.norm),
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Rescaled
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::quadrature::ball_integral;
    use crate::space::HalfSpace;
    use approx::assert_relative_eq;

    fn samples(dim: usize) -> Vec<Vec3> {
        (0..25)
            .map(|i| {
                let t = i as f64;
                let y = if dim == 3 { (1.3 * t).cos() * 0.7 } else { 0.0 };
                Vec3::new((0.7 * t).sin() * 0.8, y, 0.1 + 0.5 * (0.37 * t).cos().abs())
            })
            .collect()
    }

    #[test]
    fn exact_polynomial_examples() {
        let p1 = exact_polynomial(2, 1).unwrap();
        assert_eq!(p1.value(&point2(0.3, 0.7)), 0.7);
        let p2 = exact_polynomial(2, 2).unwrap();
        assert_relative_eq!(p2.value(&point2(0.3, 0.7)), 2.0 * 0.3 * 0.7, epsilon = 1e-15);
        assert_eq!(p2.grad(&Vec3::zeros()), Vec3::zeros());
        let q2 = exact_polynomial(3, 2).unwrap();
        assert_relative_eq!(q2.value(&point3(0.3, 0.5, 0.7)), 0.21, epsilon = 1e-15);
        assert!(exact_polynomial(3, 5).is_err());
    }

    #[test]
    fn polynomials_are_harmonic_and_vanish_on_the_plane() {
        for (dim, kmax) in [(2usize, 7usize), (3, 4)] {
            for k in 1..=kmax {
                let p = exact_polynomial(dim, k).unwrap();
                for x in samples(dim) {
                    let j = p.jet(&x);
                    assert!(j.hess.trace().abs() < 1e-12, "d={dim} k={k}");
                    let flat = Vec3::new(x.x, x.y, 0.0);
                    assert_eq!(p.value(&flat), 0.0);
                    // Euler: x . grad u = k u
                    assert_relative_eq!(x.dot(&j.grad), k as f64 * j.value, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn polynomial_derivatives_match_differences() {
        let p = Polynomial::im_z(5).add(Polynomial::im_z(3).scale(0.3));
        let x = point2(0.31, 0.42);
        let h = 1e-6;
        let j = p.jet(&x);
        for k in [0usize, 2] {
            let mut e = Vec3::zeros();
            e[k] = h;
            let fd = (p.value(&(x + e)) - p.value(&(x - e))) / (2.0 * h);
            assert_relative_eq!(j.grad[k], fd, epsilon = 1e-8);
            let fdg = (p.grad(&(x + e)) - p.grad(&(x - e))) / (2.0 * h);
            for i in [0usize, 2] {
                assert_relative_eq!(j.hess[(i, k)], fdg[i], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn simon_examples() {
        let fx = simon_fixture(0.3, 12.0).unwrap();
        let ks: Vec<i64> = fx.critical.iter().map(|p| p.k).collect();
        assert_eq!(ks, vec![-2, -1, 0, 1, 2]);
        for p in &fx.critical {
            assert!(fx.field.grad(&p.point).norm() < 1e-15);
            assert_eq!(p.singular, fx.field.value(&p.point).abs() < 1e-15);
        }
        assert_eq!(fx.singular().count(), 3);
        assert!(matches!(simon_fixture(0.5, 12.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn simon_divergence_vanishes() {
        let s = SimonField { epsilon: 0.3 };
        let h = 1e-4;
        for x in samples(3).into_iter().map(|x| x * 5.0) {
            assert!(s.divergence_residual(&x).abs() < 1e-14);
            // Independent oracle: central differences of the flux A grad u.
            let flux = |y: &Vec3| s.coefficient(y.z) * s.grad(y);
            let mut div = 0.0;
            for k in 0..3 {
                let mut e = Vec3::zeros();
                e[k] = h;
                div += (flux(&(x + e))[k] - flux(&(x - e))[k]) / (2.0 * h);
            }
            assert!(div.abs() < 1e-8, "{div}");
        }
    }

    #[test]
    fn mfs_recovers_2xy_on_flat() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap();
        let spec = MfsSpec::default();
        let f = solve_mfs(&d, &spec, &|x| u.value(x)).unwrap();
        for x in samples(2).into_iter().map(|x| x * 0.6) {
            assert!((f.value(&x) - u.value(&x)).abs() < 1e-6, "{}", (f.value(&x) - u.value(&x)).abs());
        }
    }

    #[test]
    fn mfs_zero_data_is_trivial() {
        let d = GraphDomain::flat(2);
        assert!(matches!(solve_mfs(&d, &MfsSpec::default(), &|_| 0.0), Err(Error::Trivial(_))));
    }

    #[test]
    fn mfs_on_bump_is_harmonic_with_small_residual() {
        let d = GraphDomain::new(2, Shape::QuadraticBump { a: 0.05 }, 1.0 / 6.0).unwrap();
        let u = exact_polynomial(2, 2).unwrap();
        let f = solve_mfs(&d, &MfsSpec::default(), &graph_adapted(&d, &u)).unwrap();
        assert!(f.boundary_residual <= 1e-6, "{}", f.boundary_residual);
        for x in samples(2).into_iter().map(|x| x * 0.6) {
            let j = f.jet(&x);
            assert!(j.hess.trace().abs() <= 1e-12 * j.hess.norm().max(1.0));
            let fd = fd_laplacian(&f, &x, 1e-3);
            assert!(fd.abs() < 1e-5 * j.hess.norm().max(1.0));
        }
    }

    #[test]
    fn mfs_in_three_dimensions() {
        let d = GraphDomain::flat(3);
        let u = exact_polynomial(3, 2).unwrap();
        let spec = MfsSpec { charges: 500, offset: 0.5, ..Default::default() };
        let f = solve_mfs(&d, &spec, &|x| u.value(x)).unwrap();
        for x in samples(3).into_iter().map(|x| x * 0.4) {
            assert!((f.value(&x) - u.value(&x)).abs() < 1e-4);
            assert!(f.jet(&x).hess.trace().abs() < 1e-10);
        }
    }

    #[test]
    fn rescale_examples() {
        let half = HalfSpace::upper(2);
        let spec = QuadratureSpec::default();
        let y = exact_polynomial(2, 1).unwrap();
        let t = rescale(y.clone(), &half, &Vec3::zeros(), 1.0, &spec).unwrap();
        assert_relative_eq!(t.norm, (PI / 8.0).sqrt(), epsilon = 1e-12);
        let u = exact_polynomial(2, 2).unwrap();
        for r in [0.3, 1.0, 2.5] {
            let t = rescale(u.clone(), &half, &Vec3::zeros(), r, &spec).unwrap();
            // half-disk oracle: int 4 x^2 y^2 over the unit half-disk = pi/12
            let expect = 2.0 * point2(0.2, 0.3).x * 0.3 / (PI / 12.0).sqrt();
            assert_relative_eq!(t.value(&point2(0.2, 0.3)), expect, epsilon = 1e-12);
            let region = t.region(&half);
            let m = ball_integral(&region, &Vec3::zeros(), 1.0, &spec, |x| t.value(x).powi(2)).unwrap();
            assert_relative_eq!(m.value, 1.0, epsilon = 5e-8);
            assert_eq!(t.value(&Vec3::zeros()), 0.0);
        }
        let c = Polynomial::constant(2, 3.0);
        assert!(matches!(rescale(c, &half, &Vec3::zeros(), 1.0, &spec), Err(Error::Degenerate(_))));
    }
}
