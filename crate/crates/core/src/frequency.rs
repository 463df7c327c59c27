use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GraphDomain;
use crate::harmonic::Field;
use crate::quadrature::{
    ball_integral, ball_integral_many, boundary_patch_integral_many, cap_measure_rate, gauss_legendre, mapped,
    sphere_cap_integral, sphere_cap_integral_many, Estimate, QuadratureSpec,
};
use crate::space::{tangential, Region, Vec3, VERT};

/// Frequency settings: modified-frequency constant and finite-difference step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencySpec {
    #[serde(rename = "C_mod")]
    pub c_mod: f64,
    pub fd_step_rel: f64,
}

impl Default for FrequencySpec {
    fn default() -> Self {
        Self { c_mod: 1.0, fd_step_rel: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyReport {
    pub center: Vec3,
    pub r: f64,
    pub u_center: f64,
    pub energy: f64,
    pub h_s: f64,
    pub h_c: f64,
    pub n_s: f64,
    pub n_c: f64,
    /// Largest relative error estimate among the three integrals.
    pub quad_err: f64,
}

fn rel_err(e: &Estimate) -> f64 {
    if e.value == 0.0 {
        e.error
    } else {
        e.error / e.value.abs()
    }
}

/// `D`, `H_S`, `H_C` and both frequencies at `(p, r)`.
pub fn frequency_report(field: &dyn Field, region: &dyn Region, p: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<FrequencyReport> {
    let up = field.value(p);
    let [d] = ball_integral_many(region, p, r, spec, |x| [field.grad(x).norm_squared()])?;
    let [hs, hc] = sphere_cap_integral_many(region, p, r, spec, |x| {
        let u = field.value(x);
        [u * u, (u - up) * (u - up)]
    })?;
    let scale = d.value.abs().max(hs.value.abs()) * r + f64::MIN_POSITIVE;
    if !(hc.value > 1e-300 && hc.value > 1e-28 * scale) {
        return Err(Error::Degenerate(format!("H_C vanishes at r = {r}: the field is constant on the sphere")));
    }
    let energy = d.value.max(0.0);
    Ok(FrequencyReport {
        center: *p,
        r,
        u_center: up,
        energy,
        h_s: hs.value.max(0.0),
        h_c: hc.value,
        n_s: r * energy / hs.value,
        n_c: r * energy / hc.value,
        quad_err: rel_err(&d).max(rel_err(&hs)).max(rel_err(&hc)),
    })
}

/// Distance to the graph, or zero for a boundary point.
pub fn boundary_distance(domain: &GraphDomain, p: &Vec3) -> Result<f64> {
    let level = domain.level(p);
    if level.abs() <= 1e-14 * (1.0 + p.norm()) {
        Ok(0.0)
    } else if level > 0.0 {
        Ok(domain.nearest_boundary(p)?.0)
    } else {
        Err(Error::Domain(format!("point {p:?} lies outside the domain")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeTerms {
    pub report: FrequencyReport,
    pub dist: f64,
    pub r_h: f64,
    pub r_b: f64,
    pub err_r: f64,
    /// Contribution of the moving rim `dB_r(p) cap dD`: `-N u(p)^2 r^{d-1} sigma'(r) / H`.
    pub rim: f64,
}

impl DerivativeTerms {
    /// `R_h + R_b + N Err_r + rim`, the exact derivative of `N_C`.
    pub fn predicted(&self) -> f64 {
        self.r_h + self.r_b + self.report.n_c * self.err_r + self.rim
    }

    pub fn literal(&self) -> f64 {
        self.r_h + self.r_b + self.err_r
    }
}

/// Radial-derivative decomposition of `dN_C/dr`.
pub fn derivative_terms(field: &dyn Field, domain: &GraphDomain, p: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<DerivativeTerms> {
    let report = frequency_report(field, domain, p, r, spec)?;
    let dist = boundary_distance(domain, p)?;
    let up = report.u_center;
    let n = report.n_c;
    let h = report.h_c;
    let r_h = 2.0 * r / h
        * sphere_cap_integral(domain, p, r, spec, |x| {
            let j = field.grad(x);
            let rho = j.dot(&(x - p)) / r;
            let v = rho - n / r * (field.value(x) - up);
            v * v
        })?
        .value;
    let (r_b, err_r, rim) = if r <= dist {
        (0.0, 0.0, 0.0)
    } else {
        let [pb, flux] = boundary_patch_integral_many(domain, p, r, spec, |x| {
            let nout = -domain.normal(&tangential(x));
            let dn = field.grad(x).dot(&nout);
            [dn * dn * (x - p).dot(&nout), dn]
        })?;
        let dim = domain.dim() as i32;
        let rate = cap_measure_rate(domain, p, r, 4 * spec.angular.max(16));
        (pb.value / h, 2.0 * up * flux.value / h, -n * up * up * r.powi(dim - 1) * rate / h)
    };
    Ok(DerivativeTerms { report, dist, r_h, r_b, err_r, rim })
}

/// Central difference of `N_C` in `r` with step `step_rel * r`.
pub fn frequency_derivative_fd(field: &dyn Field, region: &dyn Region, p: &Vec3, r: f64, step_rel: f64, spec: &QuadratureSpec) -> Result<f64> {
    let h = step_rel * r;
    let hi = frequency_report(field, region, p, r + h, spec)?.n_c;
    let lo = frequency_report(field, region, p, r - h, spec)?.n_c;
    Ok((hi - lo) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrequency {
    pub point: Vec3,
    pub r: f64,
    pub offset_center: Vec3,
    pub n_hat: f64,
    pub dini_factor: f64,
    pub modified: f64,
}

/// Standard frequency at `X + 3 r theta~(r) e_d` and its `exp(C int theta/s)` correction.
pub fn boundary_frequency(field: &dyn Field, domain: &GraphDomain, x: &Vec3, r: f64, c_mod: f64, spec: &QuadratureSpec) -> Result<BoundaryFrequency> {
    if domain.level(x).abs() > 1e-12 * (1.0 + x.norm()) {
        return Err(Error::Domain(format!("{x:?} is not a boundary point")));
    }
    let theta4 = domain.dini.theta(4.0 * r);
    if !(theta4 < 1.0 / 26.0) {
        return Err(Error::Precondition(format!("theta(4r) = {theta4:.4} must stay below 1/26")));
    }
    let mut offset_center = *x;
    offset_center[VERT] += 3.0 * r * domain.dini.smooth(r)?;
    if domain.level(&offset_center) < 0.0 {
        return Err(Error::Geometry(format!("offset centre {offset_center:?} left the domain")));
    }
    let rep = frequency_report(field, domain, &offset_center, r, spec)?;
    let dini_factor = (c_mod * domain.dini.dini_integral(0.0, r)?).exp();
    Ok(BoundaryFrequency { point: *x, r, offset_center, n_hat: rep.n_s, dini_factor, modified: rep.n_s * dini_factor })
}

/// `(2s/H_C) int_{dB_s} (d_r u - N_C (u - u(p)) / s)^2` on a sphere inside the region.
fn radial_term(field: &dyn Field, region: &dyn Region, p: &Vec3, s: f64, spec: &QuadratureSpec) -> Result<f64> {
    let rep = frequency_report(field, region, p, s, spec)?;
    let (n, up) = (rep.n_c, rep.u_center);
    let dev = sphere_cap_integral(region, p, s, spec, |x| {
        let v = field.grad(x).dot(&(x - p)) / s - n / s * (field.value(x) - up);
        v * v
    })?;
    Ok(2.0 * s / rep.h_c * dev.value)
}

/// `W` as `int_{r/2}^{3r/2} dN_C/ds ds` with the interior derivative; needs `B_{3r/2}(X)` inside the region.
pub fn pinch_integral(field: &dyn Field, region: &dyn Region, x: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    if region.level(x) <= 1.5 * r {
        return Err(Error::Domain(format!("B_(3r/2)({x:?}) must lie inside the domain")));
    }
    let rule = gauss_legendre(8);
    let mut total = 0.0;
    for k in 0..4 {
        let a = 0.5 * r + 0.25 * r * k as f64;
        for (s, w) in mapped(&rule, a, a + 0.25 * r) {
            total += w * radial_term(field, region, x, s, spec)?;
        }
    }
    Ok(total)
}

/// `W = N_C(X, 3r/2) - N_C(X, r/2)`.
pub fn pinch(field: &dyn Field, region: &dyn Region, x: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    let big = frequency_report(field, region, x, 1.5 * r, spec)?.n_c;
    let small = frequency_report(field, region, x, 0.5 * r, spec)?.n_c;
    Ok(big - small)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingReport {
    pub rho: f64,
    pub a: f64,
    pub ratio: f64,
    pub exponent: f64,
    pub dist: f64,
    /// `|H_C / H_S - 1|` at radius `rho`.
    pub sphere_deviation: f64,
    /// `(dist / rho)^{3/4}`.
    pub predictor: f64,
}

/// `int_{B_{a rho}} |u - u(X)|^2 / int_{B_rho} |u - u(X)|^2` and the implied exponent.
pub fn doubling_ratios(field: &dyn Field, domain: &GraphDomain, x: &Vec3, rho: f64, a: f64, spec: &QuadratureSpec) -> Result<DoublingReport> {
    if !(a > 1.0 && a < 72.0) {
        return Err(Error::Domain(format!("doubling factor must lie in (1, 72), got {a}")));
    }
    if a * rho > domain.radius / 8.0 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("a rho = {} exceeds R/8 = {}", a * rho, domain.radius / 8.0)));
    }
    let ux = field.value(x);
    let m = |r: f64| ball_integral(domain, x, r, spec, |y| (field.value(y) - ux).powi(2)).map(|e| e.value);
    let small = m(rho)?;
    if !(small > 0.0) {
        return Err(Error::Degenerate("field is constant on the inner ball".into()));
    }
    let ratio = m(a * rho)? / small;
    let dist = boundary_distance(domain, x)?;
    let (sphere_deviation, predictor) = sphere_ratio(field, domain, x, rho, dist, spec)?;
    Ok(DoublingReport { rho, a, ratio, exponent: ratio.ln() / a.ln(), dist, sphere_deviation, predictor })
}

fn sphere_ratio(field: &dyn Field, region: &dyn Region, p: &Vec3, r: f64, dist: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let rep = frequency_report(field, region, p, r, spec)?;
    if !(rep.h_s > 0.0) {
        return Err(Error::Degenerate("H_S vanishes".into()));
    }
    Ok(((rep.h_c / rep.h_s - 1.0).abs(), (dist / r).powf(0.75)))
}

/// Sphere deviation `|H_C/H_S - 1|` and its predictor `(dist/r)^{3/4}`.
pub fn sphere_ratio_decay(field: &dyn Field, domain: &GraphDomain, p: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let dist = boundary_distance(domain, p)?;
    sphere_ratio(field, domain, p, r, dist, spec)
}

/// `[r^{2-d} sum |u(X) - u(p)|^2] / [r^{-d} int_{B_r(p)} |u - u(p)|^2]` over the supplied points in `B_r(p)`.
pub fn err_beta(field: &dyn Field, region: &dyn Region, p: &Vec3, r: f64, points: &[Vec3], spec: &QuadratureSpec) -> Result<f64> {
    let d = region.dim() as i32;
    let up = field.value(p);
    let num: f64 = points.iter().filter(|x| (*x - p).norm() < r).map(|x| (field.value(x) - up).powi(2)).sum();
    if num == 0.0 {
        return Ok(0.0);
    }
    let den = ball_integral(region, p, r, spec, |y| (field.value(y) - up).powi(2))?.value * r.powi(-d);
    if !(den > 0.0) {
        return Err(Error::Degenerate("field is constant on the ball".into()));
    }
    Ok(num * r.powi(2 - d) / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialVariation {
    /// `|N_C(X1, r) - N_C(X2, r)|`
    pub lhs: f64,
    /// `W^{1/2}(X1, r) + W^{1/2}(X2, r)`
    pub rhs_core: f64,
    /// `|u(X1) - u(X2)|`
    pub value_lhs: f64,
    /// `rhs_core` times the root mean square of `u - u(X1)` on `B_r(X1)`.
    pub value_rhs_core: f64,
}

/// Both sides of the interior spatial-variation estimate, without the constant.
pub fn spatial_variation_check(field: &dyn Field, region: &dyn Region, x1: &Vec3, x2: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<SpatialVariation> {
    if (x1 - x2).norm() > r / 2.0 {
        return Err(Error::Domain("centres must satisfy |X1 - X2| <= r/2".into()));
    }
    for x in [x1, x2] {
        if region.level(x) <= 1.5 * r {
            return Err(Error::Domain(format!("B_(3r/2)({x:?}) must lie inside the domain")));
        }
    }
    let n1 = frequency_report(field, region, x1, r, spec)?.n_c;
    let n2 = frequency_report(field, region, x2, r, spec)?.n_c;
    let w1 = pinch_integral(field, region, x1, r, spec)?;
    let w2 = pinch_integral(field, region, x2, r, spec)?;
    let rhs_core = w1.sqrt() + w2.sqrt();
    let u1 = field.value(x1);
    let vol = ball_integral(region, x1, r, spec, |_| 1.0)?.value;
    let ms = ball_integral(region, x1, r, spec, |y| (field.value(y) - u1).powi(2))?.value / vol;
    Ok(SpatialVariation {
        lhs: (n1 - n2).abs(),
        rhs_core,
        value_lhs: (u1 - field.value(x2)).abs(),
        value_rhs_core: rhs_core * ms.sqrt(),
    })
}

/// Ball and sphere ratios `mean |u - u(p)|^2 on B_r(p) / mean u^2 on B_r(q)` with `q` the foot point of `p`.
pub fn comparison_ratios(field: &dyn Field, domain: &GraphDomain, p: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let q = if boundary_distance(domain, p)? == 0.0 { *p } else { domain.nearest_boundary(p)?.1 };
    let up = field.value(p);
    let ball = |c: &Vec3, g: &dyn Fn(f64) -> f64| -> Result<f64> {
        let [m, v] = ball_integral_many(domain, c, r, spec, |y| [g(field.value(y)), 1.0])?;
        Ok(m.value / v.value)
    };
    let cap = |c: &Vec3, g: &dyn Fn(f64) -> f64| -> Result<f64> {
        let [m, v] = sphere_cap_integral_many(domain, c, r, spec, |y| [g(field.value(y)), 1.0])?;
        Ok(m.value / v.value)
    };
    let sq = |u: f64| u * u;
    let centred = |u: f64| (u - up) * (u - up);
    let bq = ball(&q, &sq)?;
    let sq_cap = cap(&q, &sq)?;
    if !(bq > 0.0 && sq_cap > 0.0) {
        return Err(Error::Degenerate("field vanishes near the foot point".into()));
    }
    Ok((ball(p, &centred)? / bq, cap(p, &centred)? / sq_cap))
}

/// `|N_C(p, r) - N_q(r)|` with `N_q` the modified boundary frequency at the foot point `q` of `p`.
pub fn far_scale_gap(field: &dyn Field, domain: &GraphDomain, p: &Vec3, r: f64, c_mod: f64, spec: &QuadratureSpec) -> Result<f64> {
    let q = domain.nearest_boundary(p)?.1;
    let n = frequency_report(field, domain, p, r, spec)?.n_c;
    let b = boundary_frequency(field, domain, &q, r, c_mod, spec)?;
    Ok((n - b.modified).abs())
}

/// `N_C(X, r) / N_q(3R/4)` with `q` the foot point of `X`.
pub fn rough_bound_ratio(field: &dyn Field, domain: &GraphDomain, x: &Vec3, r: f64, c_mod: f64, spec: &QuadratureSpec) -> Result<f64> {
    let q = if boundary_distance(domain, x)? == 0.0 { *x } else { domain.nearest_boundary(x)?.1 };
    let n = frequency_report(field, domain, x, r, spec)?.n_c;
    let b = boundary_frequency(field, domain, &q, 0.75 * domain.radius, c_mod, spec)?;
    Ok(n / b.modified)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::harmonic::{exact_polynomial, graph_adapted, solve_mfs, MfsSpec, Polynomial};
    use crate::space::{point2, point3, HalfSpace};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn report_for_2xy() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap();
        let rep = frequency_report(&u, &d, &Vec3::zeros(), 1.0, &q()).unwrap();
        assert_relative_eq!(rep.energy, PI, epsilon = 1e-9);
        assert_relative_eq!(rep.h_s, PI / 2.0, epsilon = 1e-9);
        assert_relative_eq!(rep.h_c, PI / 2.0, epsilon = 1e-9);
        assert_relative_eq!(rep.n_s, 2.0, epsilon = 1e-8);
        assert_eq!(rep.n_c, rep.energy / rep.h_c);
    }

    #[test]
    fn homogeneous_frequencies() {
        for (dim, kmax) in [(2usize, 4usize), (3, 4)] {
            let d = GraphDomain::flat(dim);
            for k in 1..=kmax {
                let u = exact_polynomial(dim, k).unwrap();
                for r in [0.1, 0.5, 1.0] {
                    let rep = frequency_report(&u, &d, &Vec3::zeros(), r, &q()).unwrap();
                    assert!((rep.n_s - k as f64).abs() < 1e-6, "d={dim} k={k} r={r} N={}", rep.n_s);
                    assert!((rep.n_c - k as f64).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn interior_frequency_increases() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap();
        let p = point2(0.0, 2.0);
        let n: Vec<f64> = [0.3, 0.5, 0.8, 1.2].iter().map(|&r| frequency_report(&u, &d, &p, r, &q()).unwrap().n_c).collect();
        assert!(n[1] < 2.0);
        assert!(n.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{n:?}");
    }

    #[test]
    fn constant_field_is_degenerate() {
        let d = GraphDomain::flat(2);
        let c = Polynomial::constant(2, 1.0);
        assert!(matches!(frequency_report(&c, &d, &point2(0.0, 2.0), 0.5, &q()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn interior_derivative_is_r_h() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 3).unwrap().add(exact_polynomial(2, 1).unwrap().scale(0.4));
        let p = point2(0.2, 1.0);
        let t = derivative_terms(&u, &d, &p, 0.5, &q()).unwrap();
        assert_eq!((t.r_b, t.err_r), (0.0, 0.0));
        let fd = frequency_derivative_fd(&u, &d, &p, 0.5, 1e-3, &q()).unwrap();
        assert!((fd - t.r_h).abs() <= 1e-3 * fd.abs(), "{fd} vs {}", t.r_h);
    }

    #[test]
    fn boundary_centred_homogeneous_terms_vanish() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap();
        let t = derivative_terms(&u, &d, &Vec3::zeros(), 0.7, &q()).unwrap();
        assert_eq!(t.err_r, 0.0);
        assert!((t.r_h + t.r_b).abs() < 1e-8);
    }

    #[test]
    fn r_b_for_linear_field() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 1).unwrap();
        let (h, r) = (0.2, 0.5);
        let p = point2(0.0, h);
        let t = derivative_terms(&u, &d, &p, r, &q()).unwrap();
        // half-chord of the circle at the boundary line, and H_C = int (y - h)^2 over the cap
        let half = (r * r - h * h).sqrt();
        let beta0 = (h / r).asin();
        let hc = r * r * r * (PI / 2.0 + beta0 - 0.5 * (2.0 * beta0).sin());
        let hc_check = sphere_cap_integral(&d, &p, r, &q(), |x| (x.z - h).powi(2)).unwrap().value;
        assert_relative_eq!(hc, hc_check, epsilon = 1e-9);
        assert_relative_eq!(t.r_b, h * 2.0 * half / hc, epsilon = 1e-9);
    }

    #[test]
    fn derivative_identity_past_distance() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap().add(exact_polynomial(2, 1).unwrap().scale(0.3));
        let p = point2(0.1, 0.15);
        for r in [0.3, 0.6] {
            let t = derivative_terms(&u, &d, &p, r, &q()).unwrap();
            let fd = frequency_derivative_fd(&u, &d, &p, r, 1e-3, &q()).unwrap();
            assert!((fd - t.predicted()).abs() <= 1e-3 * fd.abs().max(1e-3), "r={r}: fd {fd}, predicted {}", t.predicted());
        }
    }

    #[test]
    fn derivative_identity_on_curved_domain() {
        let d = GraphDomain::new(2, Shape::QuadraticBump { a: 0.3 }, 1.0 / 6.0).unwrap();
        let u = exact_polynomial(2, 2).unwrap();
        let f = solve_mfs(&d, &MfsSpec::default(), &graph_adapted(&d, &u)).unwrap();
        let p = point2(0.05, 0.08);
        let r = 0.2;
        let t = derivative_terms(&f, &d, &p, r, &q()).unwrap();
        let fd = frequency_derivative_fd(&f, &d, &p, r, 1e-3, &q()).unwrap();
        assert!((fd - t.predicted()).abs() <= 1e-3 * fd.abs(), "fd {fd}, predicted {}", t.predicted());
    }

    #[test]
    fn boundary_frequency_examples() {
        let flat = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap();
        for c in [0.0, 1.0, 5.0] {
            let b = boundary_frequency(&u, &flat, &Vec3::zeros(), 0.3, c, &q()).unwrap();
            assert_eq!(b.offset_center, Vec3::zeros());
            assert_relative_eq!(b.modified, 2.0, epsilon = 1e-8);
        }
        let bump = GraphDomain::new(2, Shape::QuadraticBump { a: 0.05 }, 1.0 / 6.0).unwrap();
        let f = solve_mfs(&bump, &MfsSpec::default(), &graph_adapted(&bump, &u)).unwrap();
        let b = boundary_frequency(&f, &bump, &Vec3::zeros(), 0.05, 1.0, &q()).unwrap();
        assert!(b.offset_center.z > 0.0 && b.modified.is_finite());
        let direct = frequency_report(&f, &bump, &b.offset_center, 0.05, &q()).unwrap().n_s;
        let expect = direct * (bump.dini.dini_integral(0.0, 0.05).unwrap()).exp();
        assert_relative_eq!(b.modified, expect, max_relative = 1e-12);
        let theta = bump.dini.theta(0.2);
        assert!(b.modified <= expect * (1.0 + 5.0 * theta) && b.modified >= direct * (1.0 - 5.0 * theta));
        assert!(matches!(boundary_frequency(&f, &bump, &Vec3::zeros(), 0.5, 1.0, &q()), Err(Error::Precondition(_))));
    }

    #[test]
    fn pinch_examples() {
        let d = GraphDomain::flat(2);
        let y = exact_polynomial(2, 1).unwrap();
        assert!(pinch(&y, &d, &point2(0.3, 2.0), 1.0, &q()).unwrap().abs() < 1e-8);
        let u = exact_polynomial(2, 2).unwrap();
        assert!(pinch(&u, &d, &Vec3::zeros(), 0.4, &q()).unwrap().abs() < 1e-8);
        let v = u.clone().add(exact_polynomial(2, 3).unwrap().scale(0.2));
        let w: Vec<f64> = [0.4, 0.2, 0.1].iter().map(|&r| pinch(&v, &d, &Vec3::zeros(), r, &q()).unwrap()).collect();
        assert!(w[0] > 0.0 && w[0] > w[1] && w[1] > w[2], "{w:?}");
    }

    #[test]
    fn doubling_examples() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap();
        let rep = doubling_ratios(&u, &d, &Vec3::zeros(), 0.05, 2.0, &q()).unwrap();
        assert_relative_eq!(rep.ratio, 64.0, epsilon = 1e-6);
        assert_relative_eq!(rep.exponent, 6.0, epsilon = 1e-8);
        let y = exact_polynomial(2, 1).unwrap();
        assert_relative_eq!(doubling_ratios(&y, &d, &Vec3::zeros(), 0.05, 2.0, &q()).unwrap().ratio, 16.0, epsilon = 1e-6);
        assert!(doubling_ratios(&y, &d, &Vec3::zeros(), 0.1, 2.0, &q()).is_err());
    }

    #[test]
    fn sphere_ratio_decays_with_distance() {
        let d = GraphDomain::flat(2);
        let y = exact_polynomial(2, 1).unwrap();
        let h = 1e-3;
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&k| {
                let (dev, pred) = sphere_ratio_decay(&y, &d, &point2(0.0, h), k * h, &q()).unwrap();
                ((1.0 / k).ln(), dev.ln() - pred.ln() + 0.75 * (1.0 / k).ln())
            })
            .collect();
        let slope = (pts[3].1 - pts[0].1) / (pts[3].0 - pts[0].0);
        assert!(slope >= 0.7, "{slope}");
    }

    #[test]
    fn err_beta_examples() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap();
        assert_eq!(err_beta(&u, &d, &Vec3::zeros(), 0.5, &[], &q()).unwrap(), 0.0);
        assert_eq!(err_beta(&u, &d, &Vec3::zeros(), 0.5, &[Vec3::zeros()], &q()).unwrap(), 0.0);
        let p = point2(0.1, 1.0);
        let x = point2(0.2, 1.1);
        let e = err_beta(&u, &d, &p, 0.5, &[x], &q()).unwrap();
        let den = ball_integral(&HalfSpace::upper(2), &p, 0.5, &q(), |y| (u.value(y) - u.value(&p)).powi(2)).unwrap().value / 0.25;
        assert_relative_eq!(e, (u.value(&x) - u.value(&p)).powi(2) / den, epsilon = 1e-12);
    }

    #[test]
    fn spatial_variation_examples() {
        let d = GraphDomain::flat(2);
        let y = exact_polynomial(2, 1).unwrap();
        let s = spatial_variation_check(&y, &d, &point2(0.0, 1.0), &point2(0.05, 1.0), 0.2, &q()).unwrap();
        assert!(s.lhs < 1e-8 && s.rhs_core < 1e-4);
        let u = exact_polynomial(2, 2).unwrap();
        let s = spatial_variation_check(&u, &d, &point2(0.0, 1.0), &point2(0.05, 1.0), 0.2, &q()).unwrap();
        assert!(s.rhs_core > 0.0 && (s.lhs / s.rhs_core).is_finite());
        assert!(spatial_variation_check(&u, &d, &point2(0.0, 0.1), &point2(0.05, 0.1), 0.2, &q()).is_err());
    }

    #[test]
    fn pinch_forms_agree() {
        let d = GraphDomain::flat(2);
        let v = exact_polynomial(2, 2).unwrap().add(exact_polynomial(2, 3).unwrap().scale(0.3));
        let x = point2(0.1, 1.0);
        let a = pinch(&v, &d, &x, 0.4, &q()).unwrap();
        let b = pinch_integral(&v, &d, &x, 0.4, &q()).unwrap();
        assert!(a > 0.0 && (a - b).abs() < 1e-8 * a.max(1.0), "{a} {b}");
        let y = exact_polynomial(2, 1).unwrap();
        assert!(pinch_integral(&y, &d, &x, 0.4, &q()).unwrap() < 1e-16);
    }

    #[test]
    fn comparison_ratios_are_bounded_in_three_dimensions() {
        let d = GraphDomain::flat(3);
        let u = exact_polynomial(3, 2).unwrap();
        let p = point3(0.1, 0.05, 0.02);
        let (ball, cap) = comparison_ratios(&u, &d, &p, 0.3, &q()).unwrap();
        assert!(ball > 0.1 && ball < 10.0 && cap > 0.1 && cap < 10.0, "{ball} {cap}");
    }
}
