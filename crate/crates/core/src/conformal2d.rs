use nalgebra::{Matrix2, Vector2};

use crate::critical::{find_critical_points, CriticalSetEstimate, CriticalSpec, SearchRegion};
use crate::error::{Error, Result};
use crate::frequency::frequency_report;
use crate::geometry::GraphDomain;
use crate::harmonic::{graph_adapted, solve_mfs, Field, Jet, MfsField, MfsSpec, Polynomial, Provenance};
use crate::quadrature::{gauss_legendre, mapped, QuadratureSpec};
use crate::space::{point2, Mat3, Region, Vec2, Vec3, VERT};

type P2 = Vector2<f64>;

fn planar(p: &Vec3) -> P2 {
    P2::new(p.x, p[VERT])
}

/// `Phi = g~ + i g` with `g` harmonic, zero on the graph near the origin and `sup_{D cap B_{7R/4}} |g| = 1`.
#[derive(Debug, Clone)]
pub struct ConformalMap2D {
    pub domain: GraphDomain,
    pub radius: f64,
    g: MfsField,
    /// `g` is the fitted field divided by this.
    pub normalizer: f64,
    /// `min |grad g|^2` on the graph inside `B_{3R/2}`.
    pub hopf: f64,
    /// `max |g|` on the graph inside `B_{3R/2}`.
    pub boundary_image: f64,
    /// `min g` at interior samples of `D cap B_{3R/2}`.
    pub interior_min: f64,
    /// Radius of the largest disc about `0` in the upper half-plane whose preimage stays in `B_{3R/2}`.
    pub image_radius: f64,
    panels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSpec {
    pub mfs: MfsSpec,
    pub panels: usize,
    pub hopf_floor: f64,
    pub arc_samples: usize,
}

impl Default for MapSpec {
    fn default() -> Self {
        Self { mfs: MfsSpec::default(), panels: 16, hopf_floor: 1e-4, arc_samples: 2000 }
    }
}

fn arc_points(domain: &GraphDomain, rho: f64, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let a = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            point2(rho * a.cos(), rho * a.sin())
        })
        .filter(|p| domain.level(p) > 0.0)
        .collect()
}

fn graph_points(domain: &GraphDomain, rho: f64, n: usize) -> Vec<Vec3> {
    (0..=n)
        .map(|i| domain.boundary_point(&Vec2::new(rho * (-1.0 + 2.0 * i as f64 / n as f64), 0.0)))
        .filter(|p| p.norm() <= rho)
        .collect()
}

/// Builds `g` by a fundamental-solution fit with zero data on the graph in `B_{2R}` and `x_d - phi(x')` on the far arc.
pub fn build_map(domain: &GraphDomain, radius: f64, spec: &MapSpec) -> Result<ConformalMap2D> {
    if domain.dim() != 2 {
        return Err(Error::Domain("conformal maps need d = 2".into()));
    }
    let adm = domain.admissibility(radius);
    if !adm.admissible {
        return Err(Error::Precondition(format!(
            "domain is not admissible at R = {radius}: theta(8R) = {:.3e}, int theta/s = {:.3e}",
            adm.theta_8r, adm.integral_16r
        )));
    }
    let height = Polynomial::new(2, vec![(1.0, [0, 0, 1])]);
    let mfs = MfsSpec { window: 2.0 * radius, ..spec.mfs };
    let g = solve_mfs(domain, &mfs, &graph_adapted(domain, &height))?;
    let rho = 1.75 * radius;
    let arc = arc_points(domain, rho, spec.arc_samples);
    let (mut best, mut at) = (0.0f64, 0usize);
    for (i, p) in arc.iter().enumerate() {
        let v = g.value(p).abs();
        if v > best {
            best = v;
            at = i;
        }
    }
    // golden-section polish of the arc maximum
    let ang = |p: &Vec3| p[VERT].atan2(p.x);
    let da = std::f64::consts::PI / spec.arc_samples as f64;
    let (mut lo, mut hi) = (ang(&arc[at]) - da, ang(&arc[at]) + da);
    let f = |a: f64| {
        let p = point2(rho * a.cos(), rho * a.sin());
        if domain.level(&p) > 0.0 {
            g.value(&p).abs()
        } else {
            0.0
        }
    };
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (a, b) = (hi - gr * (hi - lo), lo + gr * (hi - lo));
        if f(a) > f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let normalizer = best.max(f(0.5 * (lo + hi)));
    if !(normalizer > 0.0) {
        return Err(Error::Quality("fitted imaginary part vanishes on the arc".into()));
    }
    let mut map = ConformalMap2D {
        domain: domain.clone(),
        radius,
        g,
        normalizer,
        hopf: 0.0,
        boundary_image: 0.0,
        interior_min: 0.0,
        image_radius: 0.0,
        panels: spec.panels,
    };
    let graph = graph_points(domain, 1.5 * radius, 200);
    map.hopf = graph.iter().map(|p| map.grad_g(p).norm_squared()).fold(f64::INFINITY, f64::min);
    map.boundary_image = graph.iter().map(|p| map.g(p).abs()).fold(0.0, f64::max);
    if !(map.hopf >= spec.hopf_floor) {
        return Err(Error::Quality(format!("Hopf bound {:.3e} below floor {:.1e}", map.hopf, spec.hopf_floor)));
    }
    let mut interior_min = f64::INFINITY;
    for i in 1..20 {
        for j in 1..20 {
            let p = point2(1.5 * radius * (-1.0 + 2.0 * i as f64 / 20.0), 1.5 * radius * j as f64 / 20.0);
            if p.norm() < 1.5 * radius && domain.level(&p) > 1e-3 * radius {
                interior_min = interior_min.min(map.g(&p));
            }
        }
    }
    map.interior_min = interior_min;
    if !(interior_min > 0.0) {
        return Err(Error::Quality(format!("Im Phi = {interior_min:.3e} is not positive inside")));
    }
    let mut image_radius = f64::INFINITY;
    for p in arc_points(domain, 1.5 * radius, 400) {
        image_radius = image_radius.min(map.phi(&p).norm());
    }
    map.image_radius = image_radius;
    Ok(map)
}

impl ConformalMap2D {
    /// The unnormalized fitted field.
    pub fn fitted(&self) -> &MfsField {
        &self.g
    }

    pub fn g(&self, p: &Vec3) -> f64 {
        self.g.value(p) / self.normalizer
    }

    pub fn grad_g(&self, p: &Vec3) -> Vec3 {
        self.g.grad(p) / self.normalizer
    }

    fn conjugate_segment(&self, a: &P2, b: &P2) -> f64 {
        let rule = gauss_legendre(8);
        let d = b - a;
        let mut total = 0.0;
        for k in 0..self.panels {
            let t0 = k as f64 / self.panels as f64;
            let t1 = (k + 1) as f64 / self.panels as f64;
            for (t, w) in mapped(&rule, t0, t1) {
                let q = a + t * d;
                let gr = self.grad_g(&point2(q.x, q.y));
                total += w * (gr[VERT] * d.x - gr.x * d.y);
            }
        }
        total
    }

    /// Harmonic conjugate `g~(p)`, integrated along the segment from the origin.
    pub fn conjugate(&self, p: &Vec3) -> f64 {
        self.conjugate_segment(&P2::zeros(), &planar(p))
    }

    /// `g~(p)` integrated along the polyline `0 -> via -> p`.
    pub fn conjugate_via(&self, p: &Vec3, via: &Vec3) -> f64 {
        let m = planar(via);
        self.conjugate_segment(&P2::zeros(), &m) + self.conjugate_segment(&m, &planar(p))
    }

    /// `Phi(p)` as the planar point `(g~, g)`.
    pub fn phi(&self, p: &Vec3) -> Vec3 {
        point2(self.conjugate(p), self.g(p))
    }

    /// `DPhi` from the Cauchy-Riemann equations: rows `(g_y, -g_x)` and `(g_x, g_y)`.
    pub fn jacobian(&self, p: &Vec3) -> Matrix2<f64> {
        let gr = self.grad_g(p);
        Matrix2::new(gr[VERT], -gr.x, gr.x, gr[VERT])
    }

    /// `DPhi` with the `g~` row from fourth-order central differences.
    pub fn jacobian_fd(&self, p: &Vec3, h: f64) -> Matrix2<f64> {
        let d = |e: Vec3| {
            (-self.conjugate(&(p + 2.0 * e)) + 8.0 * self.conjugate(&(p + e)) - 8.0 * self.conjugate(&(p - e))
                + self.conjugate(&(p - 2.0 * e)))
                / (12.0 * h)
        };
        let gr = self.grad_g(p);
        Matrix2::new(d(h * Vec3::x()), d(h * Vec3::z()), gr.x, gr[VERT])
    }

    /// `|g~_x - g_y| + |g~_y + g_x|` with finite-difference `g~`.
    pub fn cr_residual(&self, p: &Vec3, h: f64) -> f64 {
        let j = self.jacobian_fd(p, h);
        (j[(0, 0)] - j[(1, 1)]).abs() + (j[(0, 1)] + j[(1, 0)]).abs()
    }

    /// `(det DPhi, |grad g|^2)` with finite-difference `DPhi`.
    pub fn det_check(&self, p: &Vec3, h: f64) -> (f64, f64) {
        (self.jacobian_fd(p, h).determinant(), self.grad_g(p).norm_squared())
    }

    /// `Phi^{-1}(w)` by damped Newton from the linearization at the origin.
    pub fn inverse(&self, w: &Vec3) -> Result<Vec3> {
        let target = planar(w);
        let j0 = self.jacobian(&Vec3::zeros());
        let mut z = j0.try_inverse().ok_or_else(|| Error::Degenerate("DPhi(0) is singular".into()))? * target;
        let resid = |z: &P2| planar(&self.phi(&point2(z.x, z.y))) - target;
        let mut r = resid(&z);
        let tol = 1e-14 * (1.0 + target.norm());
        for _ in 0..60 {
            if r.norm() <= tol {
                return Ok(point2(z.x, z.y));
            }
            let j = self.jacobian(&point2(z.x, z.y));
            let step = j.lu().solve(&r).ok_or_else(|| Error::Degenerate("DPhi is singular".into()))?;
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..40 {
                let zt = z - t * step;
                let rt = resid(&zt);
                if rt.norm() < r.norm() {
                    z = zt;
                    r = rt;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if r.norm() <= 1e-12 * (1.0 + target.norm()) {
            Ok(point2(z.x, z.y))
        } else {
            Err(Error::Solver(format!("Phi^-1 did not converge at {w:?}: residual {:.3e}", r.norm())))
        }
    }
}

/// `u o Phi^{-1}` on the upper half-plane, extended oddly across the real axis.
pub struct PushedField<'a> {
    pub map: &'a ConformalMap2D,
    pub base: &'a dyn Field,
    pub fd_step: f64,
}

impl<'a> PushedField<'a> {
    pub fn new(map: &'a ConformalMap2D, base: &'a dyn Field) -> Self {
        Self { map, base, fd_step: 1e-5 * map.image_radius.min(1.0) }
    }

    fn fold(w: &Vec3) -> (Vec3, f64) {
        let mut up = *w;
        up[VERT] = w[VERT].abs();
        (up, if w[VERT] < 0.0 { -1.0 } else { 1.0 })
    }

    /// Preimage of the folded point.
    pub fn preimage(&self, w: &Vec3) -> Result<Vec3> {
        self.map.inverse(&Self::fold(w).0)
    }

    pub fn try_grad(&self, w: &Vec3) -> Result<Vec3> {
        let (up, sign) = Self::fold(w);
        let z = self.map.inverse(&up)?;
        let gu = self.base.grad(&z);
        let j = self.map.jacobian(&z);
        let g = j.transpose().lu().solve(&P2::new(gu.x, gu[VERT])).ok_or_else(|| Error::Degenerate("DPhi is singular".into()))?;
        let gx = if sign < 0.0 { -g.x } else { g.x };
        Ok(point2(gx, g.y))
    }
}

impl Field for PushedField<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, w: &Vec3) -> f64 {
        let (up, sign) = Self::fold(w);
        match self.map.inverse(&up) {
            Ok(z) => sign * self.base.value(&z),
            Err(_) => f64::NAN,
        }
    }

    fn grad(&self, w: &Vec3) -> Vec3 {
        self.try_grad(w).unwrap_or(Vec3::repeat(f64::NAN))
    }

    fn jet(&self, w: &Vec3) -> Jet {
        let h = self.fd_step;
        let mut hess = Mat3::zeros();
        for k in [0, VERT] {
            let mut e = Vec3::zeros();
            e[k] = h;
            hess.set_column(k, &((self.grad(&(w + e)) - self.grad(&(w - e))) / (2.0 * h)));
        }
        hess = 0.5 * (hess + hess.transpose());
        Jet { value: self.value(w), grad: self.grad(w), hess }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Pushforward
    }
}

#[derive(Debug, Clone)]
pub struct TransferReport {
    pub before: CriticalSetEstimate,
    /// Critical points of the pushed field in the closed upper half-plane, with their preimages.
    pub after: Vec<(Vec3, Vec3)>,
    pub min_det: f64,
    pub n_freq: f64,
    pub hopf: f64,
}

impl TransferReport {
    pub fn counts(&self) -> (usize, usize) {
        (self.before.points.len(), self.after.len())
    }
}

/// Critical points of `u` in `D cap B_rho` and of `u o Phi^{-1}` over the image; errors when the counts differ.
pub fn transfer_count(map: &ConformalMap2D, field: &dyn Field, rho: f64, spacing: f64, spec: &CriticalSpec) -> Result<TransferReport> {
    let domain = &map.domain;
    let region = SearchRegion::ball(2, Vec3::zeros(), rho).within(domain);
    let mut min_det = f64::INFINITY;
    for i in 0..=20 {
        for j in 0..=20 {
            let p = point2(rho * (-1.0 + 0.1 * i as f64), rho * 0.05 * j as f64 + domain.phi(&Vec2::new(rho * (-1.0 + 0.1 * i as f64), 0.0)));
            if region.contains(&p, 0.0) {
                min_det = min_det.min(map.grad_g(&p).norm_squared());
            }
        }
    }
    if min_det < 0.5 * map.hopf {
        return Err(Error::Precondition(format!("|det DPhi| = {min_det:.3e} drops below c/2 = {:.3e} on the region", 0.5 * map.hopf)));
    }
    let before = find_critical_points(field, &region, spacing, spec)?;
    let mut w_rad: f64 = 0.0;
    for p in arc_points(domain, rho, 200).iter().chain(graph_points(domain, rho, 200).iter()) {
        w_rad = w_rad.max(map.phi(p).norm());
    }
    let pushed = PushedField::new(map, field);
    let w_region = SearchRegion::ball(2, Vec3::zeros(), w_rad * 1.02);
    let w_spacing = spacing * w_rad / rho;
    let found = find_critical_points(&pushed, &w_region, w_spacing, spec)?;
    let tol = spec.dedup * w_region.diameter();
    let mut after = Vec::new();
    for p in &found.points {
        if p.point[VERT] < -tol {
            continue;
        }
        let z = pushed.preimage(&p.point)?;
        if region.contains(&z, spec.dedup * region.diameter()) {
            after.push((p.point, z));
        }
    }
    let n_freq = frequency_report(field, domain, &Vec3::zeros(), 2.0 * map.radius, &QuadratureSpec::default())?.n_s;
    if after.len() != before.points.len() {
        let mut detail = format!("direct count {} vs mapped count {}; direct:", before.points.len(), after.len());
        for p in &before.points {
            detail.push_str(&format!(" ({:.6e}, {:.6e})", p.point.x, p.point[VERT]));
        }
        detail.push_str("; mapped preimages:");
        for (_, z) in &after {
            detail.push_str(&format!(" ({:.6e}, {:.6e})", z.x, z[VERT]));
        }
        return Err(Error::Certificate { stage: "transfer".into(), detail });
    }
    Ok(TransferReport { before, after, min_det, n_freq, hopf: map.hopf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::harmonic::fd_laplacian;

    fn bump() -> GraphDomain {
        GraphDomain::new(2, Shape::QuadraticBump { a: 8e-4 }, 1.0).unwrap()
    }

    /// `Im p(z)` for a real polynomial `p` with coefficients `c[k]` of `z^k`.
    fn im_poly(c: &[f64]) -> Polynomial {
        let mut u = Polynomial::constant(2, 0.0);
        for (k, ck) in c.iter().enumerate() {
            if *ck != 0.0 && k > 0 {
                u = u.add(Polynomial::im_z(k).scale(*ck));
            }
        }
        u
    }

    #[test]
    fn flat_map_is_scaled_identity() {
        let m = build_map(&GraphDomain::flat(2), 1.0, &MapSpec::default()).unwrap();
        assert!((m.normalizer - 1.75).abs() < 1e-8, "{}", m.normalizer);
        for p in [point2(0.3, 0.2), point2(-0.5, 0.7), point2(0.0, 1.2)] {
            assert!((m.phi(&p) - p / 1.75).norm() < 1e-8);
        }
        assert!((m.hopf - 1.0 / 1.75f64.powi(2)).abs() < 1e-8);
        assert!(m.boundary_image < 1e-8);
    }

    #[test]
    fn conjugate_matches_closed_form() {
        let m = build_map(&bump(), 1.0, &MapSpec::default()).unwrap();
        let f = m.fitted();
        for p in [point2(0.3, 0.2), point2(-0.8, 0.5), point2(0.1, 1.3), point2(0.9, 0.05)] {
            // g~ = -sum w_j (arg(p - c_j) - arg(-c_j)) / normalizer
            let mut oracle = 0.0;
            for (c, w) in f.charges().iter().zip(f.weights()) {
                let (a, b) = (planar(&(-c)), planar(&(p - c)));
                oracle -= w * (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
            }
            oracle /= m.normalizer;
            assert!((m.conjugate(&p) - oracle).abs() < 1e-12, "{} {}", m.conjugate(&p), oracle);
            let via = point2(0.5 * p.x, p[VERT] + 0.5 * p.norm());
            assert!((m.conjugate_via(&p, &via) - m.conjugate(&p)).abs() < 1e-9);
        }
    }

    #[test]
    fn cauchy_riemann_and_jacobian() {
        let m = build_map(&bump(), 1.0, &MapSpec::default()).unwrap();
        assert!(m.boundary_image < 1e-6 && m.interior_min > 0.0 && m.hopf > 1e-4);
        for i in 0..10 {
            for j in 0..10 {
                let p = point2(-1.2 + 2.4 * (i as f64 + 0.5) / 10.0, 0.05 + 1.2 * j as f64 / 10.0);
                assert!(m.cr_residual(&p, 1e-3) <= 1e-8, "{p:?}");
                let (det, g2) = m.det_check(&p, 1e-3);
                assert!((det - g2).abs() <= 1e-10 * g2.max(1.0), "{det} {g2}");
                let j = m.jacobian_fd(&p, 1e-3);
                let jtj = j.transpose() * j;
                assert!(jtj[(0, 1)].abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = build_map(&bump(), 1.0, &MapSpec::default()).unwrap();
        for p in [point2(0.3, 0.2), point2(-0.7, 0.01), point2(0.2, 1.0)] {
            let back = m.inverse(&m.phi(&p)).unwrap();
            assert!((back - p).norm() < 1e-12);
        }
    }

    #[test]
    fn inadmissible_domain_is_rejected() {
        let d = GraphDomain::new(2, Shape::QuadraticBump { a: 0.3 }, 1.0).unwrap();
        assert!(matches!(build_map(&d, 1.0, &MapSpec::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn counts_agree_on_flat_polynomials() {
        let m = build_map(&GraphDomain::flat(2), 1.0, &MapSpec::default()).unwrap();
        let spec = CriticalSpec::default();
        // z^3 + 0.27 z has critical points at +-0.3 i
        for (c, want) in [(vec![0.0, 0.0, 0.0, 1.0], 1), (vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.1], 1), (vec![0.0, 0.27, 0.0, 1.0], 1)] {
            let u = im_poly(&c);
            let rep = transfer_count(&m, &u, 1.0, 0.1, &spec).unwrap();
            assert_eq!(rep.counts(), (want, want));
        }
        let rep = transfer_count(&m, &im_poly(&[0.0, 0.27, 0.0, 1.0]), 1.0, 0.1, &spec).unwrap();
        assert!((rep.before.points[0].point - point2(0.0, 0.3)).norm() < 1e-10);
        assert!((rep.after[0].1 - point2(0.0, 0.3)).norm() < 1e-8);
    }

    #[test]
    fn ladder_counts_stay_at_one() {
        let m = build_map(&GraphDomain::flat(2), 1.0, &MapSpec::default()).unwrap();
        for k in 2..=4 {
            let rep = transfer_count(&m, &Polynomial::im_z(k), 1.0, 0.1, &CriticalSpec::default()).unwrap();
            assert_eq!(rep.counts(), (1, 1));
            assert!((rep.n_freq - k as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn counts_agree_on_bump_field() {
        let d = bump();
        let m = build_map(&d, 1.0, &MapSpec::default()).unwrap();
        let u = im_poly(&[0.0, 0.27, 0.0, 1.0]);
        let f = solve_mfs(&d, &MfsSpec { window: 2.5, ..Default::default() }, &graph_adapted(&d, &u)).unwrap();
        let rep = transfer_count(&m, &f, 1.0, 0.1, &CriticalSpec::default()).unwrap();
        assert_eq!(rep.counts(), (1, 1));
        let pushed = PushedField::new(&m, &f);
        for w in [point2(0.1, 0.2), point2(-0.2, 0.3)] {
            let lap = fd_laplacian(&pushed, &w, 1e-3);
            let scale = pushed.grad(&w).norm() / 0.3;
            assert!(lap.abs() <= 1e-6 * scale, "{lap}");
        }
    }
}
