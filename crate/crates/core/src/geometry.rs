use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_1d_split;
use crate::space::{lift, tangential, Region, Vec2, Vec3, VERT};

/// Modulus of continuity of the boundary gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum DiniParameter {
    Zero,
    Holder { alpha: f64, c: f64 },
    /// Piecewise-linear samples `(r_i, theta_i)` with `r_0 = 0`, held constant past the last sample.
    Tabulated { r: Vec<f64>, theta: Vec<f64> },
}

impl DiniParameter {
    pub fn holder(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) || c <= 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!("holder parameters need alpha in (0,1] and C > 0, got alpha={alpha}, C={c}")));
        }
        Ok(Self::Holder { alpha, c })
    }

    pub fn tabulated(r: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if r.len() < 2 || r.len() != theta.len() {
            return Err(Error::Domain("tabulated modulus needs at least two matching samples".into()));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("tabulated radii must start at 0 and increase strictly".into()));
        }
        if theta.iter().any(|t| *t < 0.0 || !t.is_finite()) || theta.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("tabulated modulus must be nonnegative and nondecreasing".into()));
        }
        Ok(Self::Tabulated { r, theta })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Holder { .. } => false,
            Self::Tabulated { theta, .. } => theta.iter().all(|t| *t == 0.0),
        }
    }

    pub fn theta(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            Self::Zero => 0.0,
            Self::Holder { alpha, c } => c * s.powf(*alpha),
            Self::Tabulated { r, theta } => {
                let n = r.len();
                if s >= r[n - 1] {
                    return theta[n - 1];
                }
                let i = r.partition_point(|x| *x <= s) - 1;
                let t = (s - r[i]) / (r[i + 1] - r[i]);
                theta[i] + t * (theta[i + 1] - theta[i])
            }
        }
    }

    /// `int_a^b theta(s)/s ds`.
    pub fn dini_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && b > a) {
            return Err(Error::Domain(format!("need 0 <= a < b, got a={a}, b={b}")));
        }
        match self {
            Self::Zero => Ok(0.0),
            Self::Holder { alpha, c } => Ok(c * (b.powf(*alpha) - a.powf(*alpha)) / alpha),
            Self::Tabulated { r, theta } => {
                let n = r.len();
                let mut total = 0.0;
                let mut piece = |lo: f64, hi: f64, slope: f64, icpt: f64| -> Result<()> {
                    if hi <= lo {
                        return Ok(());
                    }
                    if lo == 0.0 {
                        if icpt != 0.0 {
                            return Err(Error::Integration("theta(0) > 0: the Dini integral diverges at 0".into()));
                        }
                    } else {
                        total += icpt * (hi / lo).ln();
                    }
                    total += slope * (hi - lo);
                    Ok(())
                };
                for i in 0..n - 1 {
                    let slope = (theta[i + 1] - theta[i]) / (r[i + 1] - r[i]);
                    let icpt = theta[i] - slope * r[i];
                    piece(a.max(r[i]), b.min(r[i + 1]), slope, icpt)?;
                }
                piece(a.max(r[n - 1]), b, 0.0, theta[n - 1])?;
                Ok(total)
            }
        }
    }

    /// The double average `(1/ln^2 2) int_r^{2r} (1/t) int_t^{2t} theta(s)/s ds dt`.
    pub fn smooth(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("smoothing radius must be positive, got {r}")));
        }
        match self {
            Self::Zero => Ok(0.0),
            Self::Holder { alpha, c } => {
                let k = 2f64.powf(*alpha) - 1.0;
                Ok(c * k * k * r.powf(*alpha) / (alpha * alpha * LN_2 * LN_2))
            }
            Self::Tabulated { r: knots, .. } => {
                let inner = |t: f64| self.dini_integral(t, 2.0 * t).map_or(f64::NAN, |v| v / t);
                let breaks: Vec<f64> = knots.iter().flat_map(|k| [*k, 0.5 * k]).collect();
                Ok(integrate_1d_split(inner, r, 2.0 * r, &breaks, 1e-14)?.value / (LN_2 * LN_2))
            }
        }
    }

    /// Checks monotonicity on a grid.
    pub fn is_monotone_on(&self, grid: &[f64]) -> bool {
        grid.windows(2).all(|w| self.theta(w[1]) >= self.theta(w[0]))
    }
}

/// Builtin graph profiles `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    Flat,
    /// `a |x|^2`.
    QuadraticBump { a: f64 },
    /// `a |x|^(1+alpha)`.
    PowerAlpha { a: f64, alpha: f64 },
    /// `a sum_i (1 - cos x_i)`.
    CosineWindow { a: f64 },
}

impl Shape {
    pub fn phi(&self, x: &Vec2) -> f64 {
        match *self {
            Shape::Flat => 0.0,
            Shape::QuadraticBump { a } => a * x.norm_squared(),
            Shape::PowerAlpha { a, alpha } => a * x.norm().powf(1.0 + alpha),
            Shape::CosineWindow { a } => a * ((1.0 - x.x.cos()) + (1.0 - x.y.cos())),
        }
    }

    pub fn grad_phi(&self, x: &Vec2) -> Vec2 {
        match *self {
            Shape::Flat => Vec2::zeros(),
            Shape::QuadraticBump { a } => 2.0 * a * x,
            Shape::PowerAlpha { a, alpha } => {
                let n = x.norm();
                if n == 0.0 {
                    Vec2::zeros()
                } else {
                    a * (1.0 + alpha) * n.powf(alpha - 1.0) * x
                }
            }
            Shape::CosineWindow { a } => Vec2::new(a * x.x.sin(), a * x.y.sin()),
        }
    }

    /// Modulus of continuity of `grad_phi` on all of `R^{d-1}`.
    pub fn dini(&self) -> DiniParameter {
        match *self {
            Shape::Flat => DiniParameter::Zero,
            Shape::QuadraticBump { a } if a != 0.0 => DiniParameter::Holder { alpha: 1.0, c: 2.0 * a.abs() },
            Shape::PowerAlpha { a, alpha } if a != 0.0 => {
                DiniParameter::Holder { alpha, c: a.abs() * (1.0 + alpha) * 2f64.powf(1.0 - alpha) }
            }
            Shape::CosineWindow { a } if a != 0.0 => DiniParameter::Holder { alpha: 1.0, c: a.abs() },
            _ => DiniParameter::Zero,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Flat => "flat",
            Shape::QuadraticBump { .. } => "quadratic-bump",
            Shape::PowerAlpha { .. } => "power-alpha",
            Shape::CosineWindow { .. } => "cosine-window",
        }
    }
}

/// `{x_d > phi(x')}` localized at radius `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDomain {
    dim: usize,
    pub shape: Shape,
    pub radius: f64,
    pub dini: DiniParameter,
}

impl GraphDomain {
    pub fn new(dim: usize, shape: Shape, radius: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Domain(format!("dimension must be 2 or 3, got {dim}")));
        }
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("localization radius must be positive, got {radius}")));
        }
        if let Shape::PowerAlpha { alpha, .. } = shape {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::Domain(format!("power-alpha exponent must lie in (0,1], got {alpha}")));
            }
        }
        Ok(Self { dim, shape, radius, dini: shape.dini() })
    }

    pub fn flat(dim: usize) -> Self {
        Self::new(dim, Shape::Flat, 1.0).expect("valid flat domain")
    }

    /// Replaces the modulus attached to the domain.
    pub fn with_dini(mut self, dini: DiniParameter) -> Self {
        self.dini = dini;
        self
    }

    fn planar(&self, x: &Vec2) -> Vec2 {
        if self.dim == 2 {
            Vec2::new(x.x, 0.0)
        } else {
            *x
        }
    }

    pub fn phi(&self, x: &Vec2) -> f64 {
        self.shape.phi(&self.planar(x))
    }

    pub fn grad_phi(&self, x: &Vec2) -> Vec2 {
        self.planar(&self.shape.grad_phi(&self.planar(x)))
    }

    pub fn boundary_point(&self, x: &Vec2) -> Vec3 {
        let x = self.planar(x);
        lift(&x, self.phi(&x))
    }

    /// Inward unit normal `(-grad phi, 1) / sqrt(1 + |grad phi|^2)`.
    pub fn normal(&self, x: &Vec2) -> Vec3 {
        let g = self.grad_phi(x);
        lift(&-g, 1.0) / (1.0 + g.norm_squared()).sqrt()
    }

    /// Distance to the graph and the closest boundary point.
    pub fn nearest_boundary(&self, p: &Vec3) -> Result<(f64, Vec3)> {
        let gap = self.level(p);
        if !(gap > 0.0) {
            return Err(Error::Domain(format!("point ({:.6e}, {:.6e}, {:.6e}) is not inside the domain", p.x, p.y, p.z)));
        }
        let pt = self.planar(&tangential(p));
        let window = 4.0 * gap;
        let cost = |x: &Vec2| 0.5 * (self.boundary_point(x) - p).norm_squared();
        let mut best = pt;
        let mut best_c = cost(&pt);
        if self.dim == 2 {
            for i in 0..=128 {
                let x = pt + Vec2::new(window * (2.0 * i as f64 / 128.0 - 1.0), 0.0);
                let c = cost(&x);
                if c < best_c {
                    best_c = c;
                    best = x;
                }
            }
        } else {
            for i in 0..=32 {
                for j in 0..=32 {
                    let off = Vec2::new(2.0 * i as f64 / 32.0 - 1.0, 2.0 * j as f64 / 32.0 - 1.0);
                    if off.norm() > 1.0 {
                        continue;
                    }
                    let x = pt + window * off;
                    let c = cost(&x);
                    if c < best_c {
                        best_c = c;
                        best = x;
                    }
                }
            }
        }
        let mut x = best;
        for _ in 0..200 {
            let g = self.grad_phi(&x);
            let res = self.phi(&x) - p[VERT];
            let grad = (x - pt) + res * g;
            let h = nalgebra::Matrix2::identity() + g * g.transpose();
            let Some(step) = h.lu().solve(&(-grad)) else { break };
            let step = self.planar(&step);
            let c0 = cost(&x);
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-8 {
                let trial = x + t * step;
                if cost(&trial) <= c0 {
                    x = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved || (t * step).norm() <= 1e-15 * (1.0 + x.norm()) {
                break;
            }
        }
        if (x - pt).norm() > window {
            return Err(Error::WindowTooSmall(format!("minimizer left |x - p'| <= {window:.3e}")));
        }
        let q = self.boundary_point(&x);
        Ok(((q - p).norm().min(gap), q))
    }

    pub fn admissibility(&self, radius: f64) -> Admissibility {
        let theta_8r = self.dini.theta(8.0 * radius);
        let integral_16r = self.dini.dini_integral(0.0, 16.0 * radius).unwrap_or(f64::INFINITY);
        Admissibility::new(radius, theta_8r, integral_16r)
    }

    pub fn critical_scale(&self, p: &Vec3) -> Result<CriticalScale> {
        let (dist, _) = self.nearest_boundary(p)?;
        let r_cs = critical_scale_for(&self.dini, dist, 5.0 * self.radius)?;
        Ok(CriticalScale { point: *p, dist, r_cs })
    }
}

impl Region for GraphDomain {
    fn dim(&self) -> usize {
        self.dim
    }

    fn level(&self, p: &Vec3) -> f64 {
        p[VERT] - self.phi(&tangential(p))
    }

    fn level_grad(&self, p: &Vec3) -> Vec3 {
        lift(&-self.grad_phi(&tangential(p)), 1.0)
    }

    fn polar_axis(&self, p: &Vec3) -> Vec3 {
        let gap = self.level(p);
        if gap > 1e-300 {
            if let Ok((d, q)) = self.nearest_boundary(p) {
                if d > 0.0 {
                    return (p - q) / d;
                }
            }
        }
        self.normal(&tangential(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub radius: f64,
    pub theta_8r: f64,
    pub integral_16r: f64,
    pub theta_ok: bool,
    pub integral_ok: bool,
    pub admissible: bool,
}

impl Admissibility {
    fn new(radius: f64, theta_8r: f64, integral_16r: f64) -> Self {
        let theta_ok = theta_8r < 1.0 / 72.0;
        let integral_ok = integral_16r <= 1.0;
        Self { radius, theta_8r, integral_16r, theta_ok, integral_ok, admissible: theta_ok && integral_ok }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalScale {
    pub point: Vec3,
    pub dist: f64,
    /// `+inf` when the modulus vanishes.
    pub r_cs: f64,
}

impl CriticalScale {
    pub fn is_unbounded(&self) -> bool {
        self.r_cs.is_infinite()
    }
}

/// Solves `dist = r * smooth_theta(r)` by bisection in `log r`.
pub fn critical_scale_for(dini: &DiniParameter, dist: f64, hint: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {dist}")));
    }
    if dini.is_zero() {
        return Ok(f64::INFINITY);
    }
    let g = |r: f64| -> Result<f64> { Ok(r * dini.smooth(r)? - dist) };
    let mut lo = dist;
    let mut hi = hint.max(dist);
    let mut steps = 0;
    while g(lo)? > 0.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 200 {
            return Err(Error::Integration("could not bracket the critical scale from below".into()));
        }
    }
    while g(hi)? < 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 400 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    let r = 0.5 * (lo + hi);
    let res = g(r)?.abs();
    if res > 1e-10 * dist {
        return Err(Error::Integration(format!("critical-scale residual {res:e} above tolerance")));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_1d;
    use crate::space::{point2, point3};
    use approx::assert_relative_eq;

    /// Nested adaptive quadrature of the double average, independent of the closed form.
    fn smooth_oracle(d: &DiniParameter, r: f64) -> f64 {
        let knots: Vec<f64> = match d {
            DiniParameter::Tabulated { r, .. } => r.iter().flat_map(|k| [*k, 0.5 * k]).collect(),
            _ => Vec::new(),
        };
        let inner = |t: f64| integrate_1d_split(|s| d.theta(s) / s, t, 2.0 * t, &knots, 1e-14).unwrap().value / t;
        integrate_1d_split(inner, r, 2.0 * r, &knots, 1e-13).unwrap().value / (LN_2 * LN_2)
    }

    #[test]
    fn dini_integral_examples() {
        let h1 = DiniParameter::holder(1.0, 1.0).unwrap();
        assert_relative_eq!(h1.dini_integral(0.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let h = DiniParameter::holder(0.5, 2.0).unwrap();
        assert_relative_eq!(h.dini_integral(0.0, 0.25).unwrap(), 2.0, epsilon = 1e-15);
        let t = DiniParameter::tabulated(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let v = t.dini_integral(0.5, 1.0).unwrap();
        let oracle = integrate_1d(|s| t.theta(s) / s, 0.5, 1.0, 1e-14).unwrap().value;
        assert_relative_eq!(v, 0.5, epsilon = 1e-15);
        assert_relative_eq!(v, oracle, epsilon = 1e-13);
    }

    #[test]
    fn non_dini_tabulated_fails() {
        let t = DiniParameter::tabulated(vec![0.0, 1.0], vec![0.1, 0.1]).unwrap();
        assert!(matches!(t.dini_integral(0.0, 1.0), Err(Error::Integration(_))));
        assert!(t.dini_integral(0.5, 1.0).is_ok());
    }

    #[test]
    fn smooth_theta_examples() {
        assert_eq!(DiniParameter::Zero.smooth(0.3).unwrap(), 0.0);
        let h1 = DiniParameter::holder(1.0, 1.0).unwrap();
        let v = h1.smooth(0.1).unwrap();
        assert_relative_eq!(v, 0.1 / (LN_2 * LN_2), epsilon = 1e-15);
        assert!((v - 0.20814).abs() < 1e-5);
        assert_relative_eq!(v, smooth_oracle(&h1, 0.1), epsilon = 1e-12);
        let h = DiniParameter::holder(0.5, 1.0).unwrap();
        let v = h.smooth(1.0).unwrap();
        let k = 2f64.sqrt() - 1.0;
        assert_relative_eq!(v, k * k / (0.25 * LN_2 * LN_2), epsilon = 1e-14);
        assert!((v - 1.4279).abs() < 1e-3);
        assert_relative_eq!(v, smooth_oracle(&h, 1.0), epsilon = 1e-11);
        assert!(h.smooth(0.0).is_err());
    }

    #[test]
    fn tabulated_smoothing_matches_oracle() {
        let t = DiniParameter::tabulated(vec![0.0, 0.1, 0.3, 1.0], vec![0.0, 0.05, 0.07, 0.2]).unwrap();
        for r in [0.02, 0.07, 0.2, 0.6] {
            assert_relative_eq!(t.smooth(r).unwrap(), smooth_oracle(&t, r), max_relative = 1e-11);
        }
    }

    #[test]
    fn normal_examples() {
        let flat = GraphDomain::flat(2);
        assert_eq!(flat.normal(&Vec2::new(0.7, 0.0)), Vec3::z());
        let d = GraphDomain::new(2, Shape::QuadraticBump { a: 0.25 }, 1.0).unwrap();
        let n = d.normal(&Vec2::new(1.0, 0.0));
        let s5 = 5f64.sqrt();
        assert!((n - point2(-1.0 / s5, 2.0 / s5)).norm() < 1e-15);
        let d3 = GraphDomain::new(3, Shape::QuadraticBump { a: 0.5 }, 1.0).unwrap();
        let n = d3.normal(&Vec2::new(1.0, 0.0));
        let s2 = 2f64.sqrt();
        assert!((n - point3(-1.0 / s2, 0.0, 1.0 / s2)).norm() < 1e-15);
    }

    #[test]
    fn nearest_boundary_examples() {
        let flat = GraphDomain::flat(2);
        let (d, q) = flat.nearest_boundary(&point2(0.0, 0.3)).unwrap();
        assert_relative_eq!(d, 0.3, epsilon = 1e-15);
        assert!(q.norm() < 1e-15);

        let bump = GraphDomain::new(2, Shape::QuadraticBump { a: 0.25 }, 1.0).unwrap();
        let p = point2(0.0, 0.5);
        let (d, q) = bump.nearest_boundary(&p).unwrap();
        // Brute-force 1-D minimization oracle.
        let oracle = (0..=200_000)
            .map(|i| {
                let x = -2.0 + 4.0 * i as f64 / 200_000.0;
                ((x * x) + (x * x / 4.0 - 0.5).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(d, oracle, epsilon = 1e-9);
        assert_relative_eq!(d, 0.5, epsilon = 1e-12);
        assert!(q.norm() < 1e-7);

        let flat3 = GraphDomain::flat(3);
        assert!(matches!(flat3.nearest_boundary(&point3(1.0, 0.2, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn nearest_boundary_off_axis() {
        let bump = GraphDomain::new(2, Shape::QuadraticBump { a: 0.5 }, 1.0).unwrap();
        let p = point2(0.4, 0.3);
        let (d, q) = bump.nearest_boundary(&p).unwrap();
        let oracle = (0..=400_000)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / 400_000.0;
                ((x - 0.4).powi(2) + (0.5 * x * x - 0.3).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(d, oracle, epsilon = 1e-10);
        assert!((bump.level(&q)).abs() < 1e-15);
    }

    #[test]
    fn critical_scale_examples() {
        let flat = GraphDomain::flat(2);
        assert!(flat.critical_scale(&point2(0.0, 0.1)).unwrap().is_unbounded());

        let h1 = DiniParameter::holder(1.0, 1.0).unwrap();
        let r = critical_scale_for(&h1, 0.01, 1.0).unwrap();
        assert_relative_eq!(r, 0.1 * LN_2, epsilon = 1e-12);
        assert!((r - 0.0693).abs() < 1e-4);

        let c = DiniParameter::tabulated(vec![0.0, 1.0], vec![0.001, 0.001]).unwrap();
        assert_relative_eq!(c.smooth(0.37).unwrap(), 0.001, epsilon = 1e-15);
        let r = critical_scale_for(&c, 1e-4, 1.0).unwrap();
        assert_relative_eq!(r, 0.1, epsilon = 1e-12);

        let bump = GraphDomain::new(2, Shape::QuadraticBump { a: 0.5 }, 1.0).unwrap().with_dini(h1.clone());
        let cs = bump.critical_scale(&point2(0.0, 0.01)).unwrap();
        assert_relative_eq!(cs.dist, 0.01, epsilon = 1e-14);
        assert_relative_eq!(cs.r_cs * h1.smooth(cs.r_cs).unwrap(), cs.dist, max_relative = 1e-10);
    }

    #[test]
    fn admissibility_examples() {
        let flat = GraphDomain::flat(2);
        let a = flat.admissibility(1.0);
        assert!(a.admissible);
        let d = GraphDomain::new(2, Shape::QuadraticBump { a: 0.5 }, 1.0).unwrap();
        let a = d.admissibility(0.001);
        assert_relative_eq!(a.theta_8r, 0.008, epsilon = 1e-15);
        assert_relative_eq!(a.integral_16r, 0.016, epsilon = 1e-15);
        assert!(a.admissible);
        let a = d.admissibility(0.01);
        assert_relative_eq!(a.theta_8r, 0.08, epsilon = 1e-15);
        assert!(!a.theta_ok && !a.admissible);
    }

    #[test]
    fn builtin_moduli_bound_gradient_differences() {
        let shapes = [
            Shape::QuadraticBump { a: 0.3 },
            Shape::PowerAlpha { a: 0.2, alpha: 0.5 },
            Shape::PowerAlpha { a: 0.1, alpha: 0.25 },
            Shape::CosineWindow { a: 0.4 },
        ];
        for shape in shapes {
            let d = GraphDomain::new(3, shape, 1.0).unwrap();
            for i in 0..40 {
                for j in 0..40 {
                    let x = Vec2::new(-1.0 + 0.05 * i as f64, 0.3 - 0.02 * j as f64);
                    let y = Vec2::new(0.7 - 0.035 * j as f64, -0.4 + 0.03 * i as f64);
                    let lhs = (d.grad_phi(&x) - d.grad_phi(&y)).norm();
                    assert!(lhs <= d.dini.theta((x - y).norm()) * (1.0 + 1e-12) + 1e-15, "{shape:?}");
                }
            }
        }
    }

    #[test]
    fn normalization_at_origin() {
        for shape in [Shape::Flat, Shape::QuadraticBump { a: 1.0 }, Shape::PowerAlpha { a: 1.0, alpha: 0.5 }, Shape::CosineWindow { a: 1.0 }] {
            let d = GraphDomain::new(3, shape, 1.0).unwrap();
            assert_eq!(d.phi(&Vec2::zeros()), 0.0);
            assert_eq!(d.grad_phi(&Vec2::zeros()), Vec2::zeros());
        }
    }
}
