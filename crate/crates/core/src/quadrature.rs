use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GraphDomain;
use crate::space::{flatten, frame, tangential, Region, Vec2, Vec3};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn build_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Cached `n`-point Gauss-Legendre rule.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let n = n.max(1);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("rule cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(build_rule(n))).clone()
}

/// Nodes and weights mapped onto `[a, b]`.
pub fn mapped(rule: &Rule, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    rule.nodes.iter().zip(&rule.weights).map(move |(x, w)| (c + h * x, h * w))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0, converged: true, evaluations: 0 }
    }
}

/// Adaptive Gauss-Legendre integration on `[a, b]` to relative tolerance `tol`.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::exact(0.0));
    }
    let rule = gauss_legendre(12);
    let mut evals = 0usize;
    let mut panel = |lo: f64, hi: f64| -> Result<(f64, f64)> {
        let (mut s, mut sa) = (0.0, 0.0);
        for (x, w) in mapped(&rule, lo, hi) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::Integration(format!("non-finite integrand at {x:e}")));
            }
            s += w * v;
            sa += w * v.abs();
        }
        evals += rule.nodes.len();
        Ok((s, sa))
    };
    let mut stack = Vec::new();
    let mut scale: f64 = 0.0;
    for i in (0..8).rev() {
        let lo = a + (b - a) * i as f64 / 8.0;
        let hi = a + (b - a) * (i + 1) as f64 / 8.0;
        let (v, va) = panel(lo, hi)?;
        scale += va;
        stack.push((lo, hi, v, 0usize));
    }
    let mut total = 0.0;
    let mut err = 0.0;
    let mut converged = true;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (l, la) = panel(lo, mid)?;
        let (r, ra) = panel(mid, hi)?;
        scale = scale.max(la + ra);
        let diff = (l + r - est).abs();
        let width = ((hi - lo) / (b - a)).abs();
        if diff <= tol * scale * width.max(1e-3) || diff <= 1e-15 * scale {
            total += l + r;
            err += diff;
        } else if depth >= 48 {
            total += l + r;
            err += diff;
            converged = false;
        } else {
            stack.push((mid, hi, r, depth + 1));
            stack.push((lo, mid, l, depth + 1));
        }
    }
    Ok(Estimate { value: total, error: err, converged, evaluations: evals })
}

/// [`integrate_1d`] with the interval split at interior `breaks` where `f` may kink.
pub fn integrate_1d_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<Estimate> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out = Estimate::exact(0.0);
    for w in pts.windows(2) {
        let e = integrate_1d(&f, w[0], w[1], tol)?;
        out.value += e.value;
        out.error += e.error;
        out.converged &= e.converged;
        out.evaluations += e.evaluations;
    }
    Ok(out)
}

/// Refinement controls for the ball, sphere and patch integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub radial: usize,
    pub angular: usize,
    pub tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { radial: 12, angular: 16, tol: 1e-8, max_depth: 12 }
    }
}

impl QuadratureSpec {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn at_level(base: usize, level: usize) -> usize {
        (base * (2 + level)).div_ceil(2)
    }
}

struct Meridian {
    dir: Vec3,
    weight: f64,
}

struct Sphere {
    dim: usize,
    axis: Vec3,
    meridians: Vec<Meridian>,
}

impl Sphere {
    fn new(region: &dyn Region, p: &Vec3, n_psi: usize) -> Self {
        let dim = region.dim();
        let axis = flatten(region.polar_axis(p), dim).normalize();
        let meridians = if dim == 2 {
            let b = Vec3::new(axis.z, 0.0, -axis.x);
            vec![Meridian { dir: b, weight: 1.0 }, Meridian { dir: -b, weight: 1.0 }]
        } else {
            let (e1, e2) = frame(&axis);
            let w = 2.0 * PI / n_psi as f64;
            (0..n_psi)
                .map(|j| {
                    let psi = (j as f64 + 0.5) * w;
                    Meridian { dir: psi.cos() * e1 + psi.sin() * e2, weight: w }
                })
                .collect()
        };
        Self { dim, axis, meridians }
    }

    fn omega(&self, m: &Meridian, beta: f64) -> Vec3 {
        beta.cos() * self.axis + beta.sin() * m.dir
    }

    fn omega_beta(&self, m: &Meridian, beta: f64) -> Vec3 {
        -beta.sin() * self.axis + beta.cos() * m.dir
    }

    fn jac(&self, beta: f64) -> f64 {
        if self.dim == 2 {
            1.0
        } else {
            beta.sin()
        }
    }

    /// Angles in `(0, pi)` where the sphere of radius `r` crosses the region boundary.
    fn crossings(&self, region: &dyn Region, p: &Vec3, m: &Meridian, r: f64, samples: usize) -> Vec<f64> {
        let h = |b: f64| region.level(&(p + r * self.omega(m, b)));
        let mut out = Vec::new();
        let mut b0 = 0.0;
        let mut h0 = h(b0) > 0.0;
        for j in 1..=samples {
            let b1 = PI * j as f64 / samples as f64;
            let h1 = h(b1) > 0.0;
            if h1 != h0 {
                let (mut lo, mut hi) = (b0, b1);
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if (h(mid) > 0.0) == h0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            b0 = b1;
            h0 = h1;
        }
        out
    }

    /// Angles where the meridian is tangent to the level set through `p`.
    fn tangencies(&self, region: &dyn Region, p: &Vec3, m: &Meridian) -> Vec<f64> {
        let g = region.level_grad(p);
        let a = self.axis.dot(&g);
        let b = m.dir.dot(&g);
        if a == 0.0 && b == 0.0 {
            return Vec::new();
        }
        let mut beta = (-a).atan2(b);
        if beta < 0.0 {
            beta += PI;
        }
        if beta > 1e-12 && beta < PI - 1e-12 {
            vec![beta]
        } else {
            Vec::new()
        }
    }

    fn breakpoints(&self, region: &dyn Region, p: &Vec3, m: &Meridian, r: f64, samples: usize, on_boundary: bool) -> Vec<f64> {
        let mut b = vec![0.0];
        b.extend(self.crossings(region, p, m, r, samples));
        if on_boundary {
            b.extend(self.tangencies(region, p, m));
        }
        b.push(PI);
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        b
    }
}

fn on_boundary(region: &dyn Region, p: &Vec3, r: f64) -> bool {
    region.level(p).abs() <= 1e-12 * r
}

fn check<const K: usize>(v: &[f64; K], x: &Vec3) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(*x))
    }
}

/// Sub-intervals of `[0, r]` along the ray `p + t w` that lie in the region.
fn ray_segments(region: &dyn Region, p: &Vec3, w: &Vec3, r: f64, samples: usize) -> Vec<(f64, f64)> {
    let h = |t: f64| region.level(&(p + t * w));
    let mut cuts = vec![0.0];
    let mut t0 = 0.0;
    let mut s0 = h(t0) > 0.0;
    for j in 1..=samples {
        let t1 = r * j as f64 / samples as f64;
        let s1 = h(t1) > 0.0;
        if s1 != s0 {
            let (mut lo, mut hi) = (t0, t1);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if (h(mid) > 0.0) == s0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * r {
                    break;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        t0 = t1;
        s0 = s1;
    }
    cuts.push(r);
    cuts.windows(2)
        .filter(|c| c[1] > c[0] && h(0.5 * (c[0] + c[1])) > 0.0)
        .map(|c| (c[0], c[1]))
        .collect()
}

struct Pass<const K: usize> {
    value: [f64; K],
    abs: [f64; K],
    evals: usize,
}

fn refine<const K: usize, P>(spec: &QuadratureSpec, mut pass: P) -> Result<[Estimate; K]>
where
    P: FnMut(usize) -> Result<Pass<K>>,
{
    let mut prev = pass(0)?;
    let mut evals = prev.evals;
    for level in 1..=spec.max_depth.max(1) {
        let cur = pass(level)?;
        evals += cur.evals;
        let mut done = true;
        let mut errs = [0.0; K];
        for k in 0..K {
            errs[k] = (cur.value[k] - prev.value[k]).abs();
            if errs[k] > spec.tol * cur.abs[k] {
                done = false;
            }
        }
        if done || level == spec.max_depth.max(1) {
            return Ok(std::array::from_fn(|k| Estimate {
                value: cur.value[k],
                error: errs[k],
                converged: done,
                evaluations: evals,
            }));
        }
        prev = cur;
    }
    unreachable!()
}

/// `int_{B_r(p) cap R} f dX` for several integrands at once.
pub fn ball_integral_many<const K: usize, F>(region: &dyn Region, p: &Vec3, r: f64, spec: &QuadratureSpec, f: F) -> Result<[Estimate; K]>
where
    F: Fn(&Vec3) -> [f64; K],
{
    if r <= 0.0 {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let dim = region.dim();
    let bnd = on_boundary(region, p, r);
    refine(spec, |level| {
        let n_beta = QuadratureSpec::at_level(spec.angular, level);
        let n_t = QuadratureSpec::at_level(spec.radial, level);
        let n_psi = 2 * n_beta;
        let samples = 48 + 16 * level;
        let sphere = Sphere::new(region, p, n_psi);
        let rule_b = gauss_legendre(n_beta);
        let rule_t = gauss_legendre(n_t);
        let mut value = [0.0; K];
        let mut abs = [0.0; K];
        let mut evals = 0;
        for m in &sphere.meridians {
            let breaks = sphere.breakpoints(region, p, m, r, samples, bnd);
            for seg in breaks.windows(2) {
                for (beta, wb) in mapped(&rule_b, seg[0], seg[1]) {
                    let w = sphere.omega(m, beta);
                    let ang = m.weight * wb * sphere.jac(beta);
                    for (t0, t1) in ray_segments(region, p, &w, r, 16 + 4 * level) {
                        for (t, wt) in mapped(&rule_t, t0, t1) {
                            let x = p + t * w;
                            let v = f(&x);
                            check(&v, &x)?;
                            let jw = ang * wt * t.powi(dim as i32 - 1);
                            for k in 0..K {
                                value[k] += jw * v[k];
                                abs[k] += jw * v[k].abs();
                            }
                            evals += 1;
                        }
                    }
                }
            }
        }
        Ok(Pass { value, abs, evals })
    })
}

pub fn ball_integral<F: Fn(&Vec3) -> f64>(region: &dyn Region, p: &Vec3, r: f64, spec: &QuadratureSpec, f: F) -> Result<Estimate> {
    Ok(ball_integral_many(region, p, r, spec, |x| [f(x)])?[0])
}

/// `int_{dB_r(p) cap R} f dH^{d-1}` for several integrands at once.
pub fn sphere_cap_integral_many<const K: usize, F>(region: &dyn Region, p: &Vec3, r: f64, spec: &QuadratureSpec, f: F) -> Result<[Estimate; K]>
where
    F: Fn(&Vec3) -> [f64; K],
{
    if r <= 0.0 {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let dim = region.dim();
    let scale = r.powi(dim as i32 - 1);
    refine(spec, |level| {
        let n_beta = QuadratureSpec::at_level(spec.angular, level);
        let n_psi = 2 * n_beta;
        let samples = 48 + 16 * level;
        let sphere = Sphere::new(region, p, n_psi);
        let rule_b = gauss_legendre(n_beta);
        let mut value = [0.0; K];
        let mut abs = [0.0; K];
        let mut evals = 0;
        for m in &sphere.meridians {
            let breaks = sphere.breakpoints(region, p, m, r, samples, false);
            for seg in breaks.windows(2) {
                let mid = 0.5 * (seg[0] + seg[1]);
                if region.level(&(p + r * sphere.omega(m, mid))) <= 0.0 {
                    continue;
                }
                for (beta, wb) in mapped(&rule_b, seg[0], seg[1]) {
                    let x = p + r * sphere.omega(m, beta);
                    let v = f(&x);
                    check(&v, &x)?;
                    let jw = scale * m.weight * wb * sphere.jac(beta);
                    for k in 0..K {
                        value[k] += jw * v[k];
                        abs[k] += jw * v[k].abs();
                    }
                    evals += 1;
                }
            }
        }
        Ok(Pass { value, abs, evals })
    })
}

pub fn sphere_cap_integral<F: Fn(&Vec3) -> f64>(region: &dyn Region, p: &Vec3, r: f64, spec: &QuadratureSpec, f: F) -> Result<Estimate> {
    Ok(sphere_cap_integral_many(region, p, r, spec, |x| [f(x)])?[0])
}

/// Rate of change `d/dr` of the unit-sphere measure of `{w : p + r w in R}`.
pub fn cap_measure_rate(region: &dyn Region, p: &Vec3, r: f64, n_psi: usize) -> f64 {
    let sphere = Sphere::new(region, p, n_psi.max(8));
    let mut rate = 0.0;
    for m in &sphere.meridians {
        for beta in sphere.crossings(region, p, m, r, 256) {
            let w = sphere.omega(m, beta);
            let x = p + r * w;
            let g = region.level_grad(&x);
            let h_r = g.dot(&w);
            let h_b = r * g.dot(&sphere.omega_beta(m, beta));
            if h_b == 0.0 {
                continue;
            }
            let inside_below = region.level(&(p + r * sphere.omega(m, beta - 1e-7))) > 0.0;
            let sign = if inside_below { 1.0 } else { -1.0 };
            rate += m.weight * sphere.jac(beta) * sign * (-h_r / h_b);
        }
    }
    rate
}

/// Unit-sphere measure of `{w : p + r w in R}`.
pub fn cap_measure(region: &dyn Region, p: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    let e = sphere_cap_integral(region, p, r, spec, |_| 1.0)?;
    Ok(e.value / r.powi(region.dim() as i32 - 1))
}

/// `int_{B_r(p) cap dD} f dH^{d-1}` over the graph patch, for several integrands at once.
pub fn boundary_patch_integral_many<const K: usize, F>(domain: &GraphDomain, p: &Vec3, r: f64, spec: &QuadratureSpec, f: F) -> Result<[Estimate; K]>
where
    F: Fn(&Vec3) -> [f64; K],
{
    if r <= 0.0 {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let dim = domain.dim();
    let foot = if domain.level(p) > 0.0 { domain.nearest_boundary(p)?.1 } else { domain.boundary_point(&tangential(p)) };
    if (foot - p).norm() >= r {
        return Ok(std::array::from_fn(|_| Estimate::exact(0.0)));
    }
    let q = tangential(&foot);
    let reach = r + (q - tangential(p)).norm() + 1e-12;
    let inside = |x: &Vec2| r * r - (domain.boundary_point(x) - p).norm_squared();
    let exit = |e: &Vec2| -> f64 {
        let samples = 64;
        let mut t0 = 0.0;
        for j in 1..=samples {
            let t1 = reach * j as f64 / samples as f64;
            if inside(&(q + t1 * e)) <= 0.0 {
                let (mut lo, mut hi) = (t0, t1);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if inside(&(q + mid * e)) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * reach {
                        break;
                    }
                }
                return 0.5 * (lo + hi);
            }
            t0 = t1;
        }
        reach
    };
    refine(spec, |level| {
        let n_t = QuadratureSpec::at_level(spec.radial, level);
        let n_psi = 2 * QuadratureSpec::at_level(spec.angular, level);
        let rays: Vec<(Vec2, f64)> = if dim == 2 {
            vec![(Vec2::new(1.0, 0.0), 1.0), (Vec2::new(-1.0, 0.0), 1.0)]
        } else {
            let w = 2.0 * PI / n_psi as f64;
            (0..n_psi).map(|j| {
                let psi = (j as f64 + 0.5) * w;
                (Vec2::new(psi.cos(), psi.sin()), w)
            }).collect()
        };
        let rule = gauss_legendre(n_t);
        let mut value = [0.0; K];
        let mut abs = [0.0; K];
        let mut evals = 0;
        for (e, we) in &rays {
            let t_max = exit(e);
            for (t, wt) in mapped(&rule, 0.0, t_max) {
                let xt = q + t * e;
                let x = domain.boundary_point(&xt);
                let v = f(&x);
                check(&v, &x)?;
                let area = (1.0 + domain.grad_phi(&xt).norm_squared()).sqrt();
                let jw = we * wt * area * if dim == 3 { t } else { 1.0 };
                for k in 0..K {
                    value[k] += jw * v[k];
                    abs[k] += jw * v[k].abs();
                }
                evals += 1;
            }
        }
        Ok(Pass { value, abs, evals })
    })
}

pub fn boundary_patch_integral<F: Fn(&Vec3) -> f64>(domain: &GraphDomain, p: &Vec3, r: f64, spec: &QuadratureSpec, f: F) -> Result<Estimate> {
    Ok(boundary_patch_integral_many(domain, p, r, spec, |x| [f(x)])?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::space::{point2, point3, HalfSpace, WholeSpace};
    use approx::assert_relative_eq;

    fn flat(dim: usize) -> GraphDomain {
        GraphDomain::new(dim, Shape::Flat, 1.0).unwrap()
    }

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in [1usize, 2, 5, 12, 33, 96] {
            let rule = gauss_legendre(n);
            let s: f64 = rule.weights.iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let m: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert_relative_eq!(m, exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn adaptive_1d() {
        let e = integrate_1d(|x| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(e.value, 2.0 / 3.0, epsilon = 1e-11);
        assert!(e.converged);
        assert!(!integrate_1d(|x| 1.0 / x, 0.0, 1.0, 1e-12).unwrap().converged);
    }

    #[test]
    fn interior_disk_area() {
        let d = flat(2);
        let e = ball_integral(&d, &point2(0.0, 1.0), 0.5, &QuadratureSpec::default(), |_| 1.0).unwrap();
        assert_relative_eq!(e.value, PI * 0.25, epsilon = 1e-12);
    }

    #[test]
    fn half_disk_area() {
        let d = flat(2);
        let e = ball_integral(&d, &point2(0.0, 0.0), 1.0, &QuadratureSpec::default(), |_| 1.0).unwrap();
        assert_relative_eq!(e.value, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_energy_of_2xy() {
        let d = flat(2);
        let e = ball_integral(&d, &point2(0.0, 0.0), 1.0, &QuadratureSpec::default(), |x| 4.0 * (x.x * x.x + x.z * x.z)).unwrap();
        assert_relative_eq!(e.value, PI, epsilon = 1e-12);
    }

    #[test]
    fn sphere_examples() {
        let spec = QuadratureSpec::default();
        let e = sphere_cap_integral(&flat(2), &point2(0.0, 0.0), 1.0, &spec, |_| 1.0).unwrap();
        assert_relative_eq!(e.value, PI, epsilon = 1e-12);
        let e = sphere_cap_integral(&flat(2), &point2(0.0, 0.0), 1.0, &spec, |x| (2.0 * x.x * x.z).powi(2)).unwrap();
        assert_relative_eq!(e.value, PI / 2.0, epsilon = 1e-12);
        let e = sphere_cap_integral(&flat(3), &point3(0.0, 0.0, 0.0), 2.0, &spec, |_| 1.0).unwrap();
        assert_relative_eq!(e.value, 8.0 * PI, epsilon = 1e-10);
    }

    #[test]
    fn ball_volume_3d() {
        let e = ball_integral(&WholeSpace { dim: 3 }, &point3(0.3, -0.2, 0.1), 0.7, &QuadratureSpec::default(), |_| 1.0).unwrap();
        assert_relative_eq!(e.value, 4.0 / 3.0 * PI * 0.343, epsilon = 1e-10);
    }

    #[test]
    fn half_ball_off_center() {
        // Ball of radius 1 centred at height 0.5 cut by the plane: cap volume formula.
        let e = ball_integral(&HalfSpace::upper(3), &point3(0.0, 0.0, 0.5), 1.0, &QuadratureSpec::default(), |_| 1.0).unwrap();
        let h = 1.5;
        let cap = PI * h * h * (3.0 - h) / 3.0;
        assert_relative_eq!(e.value, cap, epsilon = 1e-9);
    }

    #[test]
    fn patch_examples() {
        let spec = QuadratureSpec::default();
        let e = boundary_patch_integral(&flat(2), &point2(0.0, 0.0), 1.0, &spec, |_| 1.0).unwrap();
        assert_relative_eq!(e.value, 2.0, epsilon = 1e-12);
        let h = 0.3;
        let p = point2(0.0, h);
        let e = boundary_patch_integral(&flat(2), &p, 1.0, &spec, |x| (x - p).dot(&-Vec3::z())).unwrap();
        let len = 2.0 * (1.0 - h * h).sqrt();
        assert_relative_eq!(e.value, h * len, epsilon = 1e-10);
    }

    #[test]
    fn patch_on_parabola() {
        let d = GraphDomain::new(2, Shape::QuadraticBump { a: 0.25 }, 1.0).unwrap();
        let r = 0.2;
        let e = boundary_patch_integral(&d, &point2(0.0, 0.0), r, &QuadratureSpec::default(), |_| 1.0).unwrap();
        // x_max solves x^2 + x^4/16 = r^2.
        let x_max = (8.0 * ((1.0 + r * r / 4.0).sqrt() - 1.0)).sqrt();
        let oracle = integrate_1d(|x| (1.0 + x * x / 4.0).sqrt(), -x_max, x_max, 1e-14).unwrap();
        assert_relative_eq!(e.value, oracle.value, epsilon = 1e-10);
    }

    #[test]
    fn non_finite_reports_point() {
        let err = ball_integral(&flat(2), &point2(0.0, 1.0), 0.5, &QuadratureSpec::default(), |x| 1.0 / (x.x - x.x)).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn cap_rate_matches_difference() {
        let d = GraphDomain::new(3, Shape::QuadraticBump { a: 0.3 }, 1.0).unwrap();
        let p = point3(0.05, -0.02, 0.08);
        let spec = QuadratureSpec { tol: 1e-12, ..Default::default() };
        let r = 0.3;
        let h = 1e-4;
        let fd = (cap_measure(&d, &p, r + h, &spec).unwrap() - cap_measure(&d, &p, r - h, &spec).unwrap()) / (2.0 * h);
        let an = cap_measure_rate(&d, &p, r, 256);
        assert_relative_eq!(an, fd, max_relative = 1e-6);
    }
}
