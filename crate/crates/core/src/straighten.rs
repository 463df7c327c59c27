use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GraphDomain;
use crate::harmonic::{Field, Jet, Provenance};
use crate::quadrature::{ball_integral, gauss_legendre, mapped, QuadratureSpec};
use crate::space::{lift, pad_planar, tangential, HalfSpace, Mat3, Region, Vec2, Vec3, VERT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StraightenSpec {
    pub moll_pts: usize,
    pub ball_search_grid: usize,
    /// Test-bump radius relative to the working radius.
    pub bump_radius: f64,
}

impl Default for StraightenSpec {
    fn default() -> Self {
        Self { moll_pts: 96, ball_search_grid: 24, bump_radius: 0.2 }
    }
}

#[derive(Debug, Clone, Copy)]
struct MollNode {
    z: Vec2,
    w: f64,
    rho: f64,
    grad: Vec2,
    /// Combined weights `w rho`, `w grad rho`, `w (rho - radial)`.
    wp: f64,
    wg: Vec2,
    ws: f64,
}

/// `c exp(-1/(1-|z|^2))` on the unit ball of `R^{d-1}`, with a fixed product rule.
#[derive(Debug, Clone)]
pub struct Mollifier {
    dim: usize,
    norm: f64,
    kappa: f64,
    nodes: Vec<MollNode>,
}

fn bump(t2: f64) -> f64 {
    if t2 < 1.0 {
        (-1.0 / (1.0 - t2)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    pub fn new(dim: usize, pts: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Domain(format!("dimension must be 2 or 3, got {dim}")));
        }
        if pts < 16 {
            return Err(Error::Domain("mollifier needs at least 16 points per axis".into()));
        }
        let panels = [0.0, 0.55, 0.8, 0.93, 1.0];
        let mut raw: Vec<(Vec2, f64)> = Vec::new();
        if dim == 2 {
            let rule = gauss_legendre(pts / 6);
            for ab in panels.windows(2) {
                for sign in [-1.0, 1.0] {
                    for (t, w) in mapped(&rule, ab[0], ab[1]) {
                        raw.push((Vec2::new(sign * t, 0.0), w));
                    }
                }
            }
        } else {
            let rule = gauss_legendre(pts / 6);
            let n_psi = pts / 4;
            for ab in panels.windows(2) {
                for (t, wt) in mapped(&rule, ab[0], ab[1]) {
                    for j in 0..n_psi {
                        let psi = 2.0 * PI * (j as f64 + 0.5) / n_psi as f64;
                        raw.push((t * Vec2::new(psi.cos(), psi.sin()), wt * t * 2.0 * PI / n_psi as f64));
                    }
                }
            }
        }
        // Unit discrete mass, and z . grad rho rescaled so its discrete moment is exactly -(d-1).
        let norm: f64 = raw.iter().map(|(z, w)| w * bump(z.norm_squared())).sum();
        let mut m = Self { dim, norm, kappa: 1.0, nodes: Vec::new() };
        let zg: f64 = raw.iter().map(|(z, w)| w * z.dot(&m.derivs(z).1)).sum();
        m.kappa = -((dim - 1) as f64) / zg;
        for (z, w) in raw {
            let (rho, grad, radial) = m.derivs(&z);
            m.nodes.push(MollNode { z, w, rho, grad, wp: w * rho, wg: w * grad, ws: w * (rho - radial) });
        }
        Ok(m)
    }

    /// Normalizing constant of the profile, i.e. `int exp(-1/(1-|z|^2)) dz`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `rho(z)`, `grad rho(z)` and `(d-1) rho + z . grad rho`.
    pub fn derivs(&self, z: &Vec2) -> (f64, Vec2, f64) {
        let t2 = z.norm_squared();
        let rho = bump(t2) / self.norm;
        if rho == 0.0 {
            return (0.0, Vec2::zeros(), 0.0);
        }
        let q = 1.0 - t2;
        let grad = -2.0 * rho / (q * q) * z;
        (rho, grad, (self.dim - 1) as f64 * rho + self.kappa * z.dot(&grad))
    }

    /// Discrete `int rho`, `int grad rho` and the uncorrected `int z . grad rho`.
    pub fn moments(&self) -> (f64, Vec2, f64) {
        let mut mass = 0.0;
        let mut g = Vec2::zeros();
        let mut zg = 0.0;
        for n in &self.nodes {
            mass += n.w * n.rho;
            g += n.w * n.grad;
            zg += n.w * n.z.dot(&n.grad);
        }
        (mass, g, zg)
    }
}

/// `G(x, s) = (x, phi(x)) + s (rho_s * n)(x)` and its derivatives.
#[derive(Debug, Clone)]
pub struct StraighteningMap {
    pub domain: GraphDomain,
    pub moll: Mollifier,
}

struct Convolutions {
    plain: Vec3,
    partial: [Vec3; 2],
    vertical: Vec3,
}

impl StraighteningMap {
    pub fn new(domain: GraphDomain, moll_pts: usize) -> Result<Self> {
        let moll = Mollifier::new(domain.dim(), moll_pts)?;
        Ok(Self { domain, moll })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn convolve(&self, x: &Vec2, s: f64) -> Convolutions {
        let mut c = Convolutions { plain: Vec3::zeros(), partial: [Vec3::zeros(); 2], vertical: Vec3::zeros() };
        for node in &self.moll.nodes {
            if node.rho == 0.0 {
                continue;
            }
            let n = self.domain.normal(&(x - s * node.z));
            c.plain += node.wp * n;
            c.partial[0] += node.wg.x * n;
            c.partial[1] += node.wg.y * n;
            c.vertical += node.ws * n;
        }
        c
    }

    fn check_s(s: f64) -> Result<()> {
        if s < 0.0 || !s.is_finite() {
            return Err(Error::Domain(format!("G is defined for s >= 0, got {s}")));
        }
        Ok(())
    }

    /// `G(y)` with `y = (x, s)`.
    pub fn map(&self, y: &Vec3) -> Result<Vec3> {
        let (x, s) = (tangential(y), y[VERT]);
        Self::check_s(s)?;
        let base = self.domain.boundary_point(&x);
        if s == 0.0 {
            return Ok(base);
        }
        Ok(base + s * self.convolve(&x, s).plain)
    }

    /// `DG(y)`; columns are `d_i G` and `d_s G`.
    pub fn jacobian(&self, y: &Vec3) -> Result<Mat3> {
        let (x, s) = (tangential(y), y[VERT]);
        Self::check_s(s)?;
        let dim = self.dim();
        let g = self.domain.grad_phi(&x);
        let mut m = Mat3::zeros();
        for i in 0..dim - 1 {
            let mut e = Vec3::zeros();
            e[i] = 1.0;
            e[VERT] = g[i];
            m.set_column(i, &e);
        }
        if s == 0.0 {
            m.set_column(VERT, &self.domain.normal(&x));
        } else {
            let c = self.convolve(&x, s);
            for i in 0..dim - 1 {
                let col = m.column(i) + c.partial[i];
                m.set_column(i, &col);
            }
            m.set_column(VERT, &c.vertical);
        }
        pad_planar(&mut m, dim);
        Ok(m)
    }

    pub fn det(&self, y: &Vec3) -> Result<f64> {
        Ok(self.jacobian(y)?.determinant())
    }

    /// Largest relative deviation of `DG` from central differences of `G`; errors beyond `1e-4`.
    pub fn check_jacobian(&self, y: &Vec3, h: f64) -> Result<f64> {
        let dg = self.jacobian(y)?;
        let dim = self.dim();
        let axes: Vec<usize> = if dim == 2 { vec![0, VERT] } else { vec![0, 1, VERT] };
        let mut worst: f64 = 0.0;
        for &k in &axes {
            let mut e = Vec3::zeros();
            e[k] = h;
            let fd = (self.map(&(y + e))? - self.map(&(y - e))?) / (2.0 * h);
            let col = dg.column(k);
            worst = worst.max((fd - col).norm() / col.norm().max(1e-300));
        }
        if worst > 1e-4 {
            return Err(Error::SelfCheck(format!("DG disagrees with finite differences by {worst:.3e} at {y:?}")));
        }
        Ok(worst)
    }

    /// `c(x) diag((I + grad phi grad phi^T)^{-1}, 1)` with `c = sqrt(1 + |grad phi|^2)`.
    pub fn boundary_coefficient(&self, x: &Vec2) -> Mat3 {
        let g = self.domain.grad_phi(x);
        let c = (1.0 + g.norm_squared()).sqrt();
        let mut m = Mat3::identity();
        let g3 = lift(&g, 0.0);
        let outer = g3 * g3.transpose();
        // (I + g g^T)^{-1} = I - g g^T / (1 + |g|^2) on the tangential block
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] -= outer[(i, j)] / (1.0 + g.norm_squared());
            }
        }
        m *= c;
        pad_planar(&mut m, self.dim());
        m
    }

    /// `A = |det DG| DG^{-1} DG^{-T}` for `s > 0`, the boundary limit at `s = 0`.
    pub fn coefficient(&self, y: &Vec3) -> Result<Mat3> {
        let s = y[VERT];
        Self::check_s(s)?;
        if s == 0.0 {
            return Ok(self.boundary_coefficient(&tangential(y)));
        }
        let dg = self.jacobian(y)?;
        let det = dg.determinant();
        if !(0.5..=1.5).contains(&det) {
            return Err(Error::WorkingBall(format!("det DG = {det:.4} outside [1/2, 3/2] at {y:?}")));
        }
        let inv = dg.try_inverse().ok_or_else(|| Error::WorkingBall("DG is singular".into()))?;
        let mut a = det.abs() * inv * inv.transpose();
        a = 0.5 * (a + a.transpose());
        pad_planar(&mut a, self.dim());
        Ok(a)
    }

    /// The reflected matrix on the whole ball.
    pub fn reflected(&self, y: &Vec3) -> Result<Mat3> {
        if y[VERT] >= 0.0 {
            return self.coefficient(y);
        }
        let mut up = *y;
        up[VERT] = -y[VERT];
        let mut a = self.coefficient(&up)?;
        for i in 0..2 {
            a[(i, VERT)] = -a[(i, VERT)];
            a[(VERT, i)] = -a[(VERT, i)];
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingBall {
    pub radius: f64,
    pub det_min: f64,
    pub det_max: f64,
    /// Smallest of `lambda_min(A)` and `1 / lambda_max(A)` over the samples.
    pub ellipticity: f64,
}

fn half_ball_samples(dim: usize, r: f64, grid: usize) -> Vec<Vec3> {
    let mut out = Vec::new();
    let g = grid.max(2);
    let coord = |k: usize| -r + 2.0 * r * k as f64 / (g - 1) as f64;
    let ys: Vec<f64> = if dim == 3 { (0..g).map(coord).collect() } else { vec![0.0] };
    for i in 0..g {
        for &y in &ys {
            for k in 0..g {
                let s = r * k as f64 / (g - 1) as f64;
                let p = Vec3::new(coord(i), y, s);
                if p.norm() <= r {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Largest radius `<= r_max` on whose sampled upper half-ball `det DG` stays in `[1/2, 3/2]` and `G` maps into `D`.
pub fn working_radius(map: &StraighteningMap, r_max: f64, grid: usize) -> Result<WorkingBall> {
    let dim = map.dim();
    let ok = |r: f64| -> bool {
        half_ball_samples(dim, r, grid).iter().all(|y| {
            let det = match map.det(y) {
                Ok(d) => d,
                Err(_) => return false,
            };
            let inside = y[VERT] == 0.0 || map.map(y).map(|g| map.domain.level(&g) > 0.0).unwrap_or(false);
            (0.5..=1.5).contains(&det) && inside
        })
    };
    let radius = if ok(r_max) {
        r_max
    } else {
        let (mut lo, mut hi) = (0.0, r_max);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    if radius <= 0.0 {
        return Err(Error::WorkingBall("no admissible radius found".into()));
    }
    let mut det_min = f64::INFINITY;
    let mut det_max: f64 = 0.0;
    let mut ellipticity = f64::INFINITY;
    for y in half_ball_samples(dim, radius, grid) {
        let det = map.det(&y)?;
        det_min = det_min.min(det);
        det_max = det_max.max(det);
        let eig = map.coefficient(&y)?.symmetric_eigenvalues();
        let (lmin, lmax) = (eig.min(), eig.max());
        ellipticity = ellipticity.min(lmin).min(1.0 / lmax);
    }
    Ok(WorkingBall { radius, det_min, det_max, ellipticity })
}

/// Odd extension `u~(x, s) = sign(s) u(G(x, |s|))` on the working ball.
pub struct ExtendedField<'a> {
    pub base: &'a dyn Field,
    pub map: &'a StraighteningMap,
    pub radius: f64,
}

impl<'a> ExtendedField<'a> {
    pub fn new(base: &'a dyn Field, map: &'a StraighteningMap, radius: f64) -> Self {
        Self { base, map, radius }
    }

    fn fold(&self, y: &Vec3) -> Result<(Vec3, f64)> {
        if y.norm() > self.radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("{y:?} lies outside the working ball of radius {}", self.radius)));
        }
        let mut up = *y;
        let sign = if y[VERT] < 0.0 { -1.0 } else if y[VERT] > 0.0 { 1.0 } else { 0.0 };
        up[VERT] = y[VERT].abs();
        Ok((up, sign))
    }

    pub fn try_value(&self, y: &Vec3) -> Result<f64> {
        let (up, sign) = self.fold(y)?;
        if sign == 0.0 {
            return Ok(0.0);
        }
        Ok(sign * self.base.value(&self.map.map(&up)?))
    }

    /// `grad u~ = DG^T grad u(G)` above, reflected below.
    pub fn try_grad(&self, y: &Vec3) -> Result<Vec3> {
        let (up, sign) = self.fold(y)?;
        let sign = if sign == 0.0 { 1.0 } else { sign };
        let dg = self.map.jacobian(&up)?;
        let mut g = dg.transpose() * self.base.grad(&self.map.map(&up)?);
        if self.map.dim() == 2 {
            g[1] = 0.0;
        }
        if sign < 0.0 {
            for i in 0..2 {
                g[i] = -g[i];
            }
        }
        Ok(g)
    }

    /// Pulls a gradient in `(x, s)` coordinates back to `grad u` at `G(x, s)` by solving against `DG^T`.
    pub fn pull_back(&self, y: &Vec3, grad_ext: &Vec3) -> Result<Vec3> {
        let (up, _) = self.fold(y)?;
        let dg = self.map.jacobian(&up)?;
        dg.transpose().lu().solve(grad_ext).ok_or_else(|| Error::WorkingBall("DG is singular".into()))
    }
}

impl Field for ExtendedField<'_> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn value(&self, y: &Vec3) -> f64 {
        self.try_value(y).unwrap_or(f64::NAN)
    }

    fn grad(&self, y: &Vec3) -> Vec3 {
        self.try_grad(y).unwrap_or(Vec3::repeat(f64::NAN))
    }

    fn jet(&self, y: &Vec3) -> Jet {
        let h = 1e-5 * self.radius;
        let mut hess = Mat3::zeros();
        let axes: &[usize] = if self.dim() == 2 { &[0, 2] } else { &[0, 1, 2] };
        for &k in axes {
            let mut e = Vec3::zeros();
            e[k] = h;
            let col = (self.grad(&(y + e)) - self.grad(&(y - e))) / (2.0 * h);
            hess.set_column(k, &col);
        }
        hess = 0.5 * (hess + hess.transpose());
        Jet { value: self.value(y), grad: self.grad(y), hess }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Extension
    }
}

/// Integral over `B_r(c)` split at `{s = 0}` so each piece has a smooth integrand.
pub fn split_ball_integral<F: Fn(&Vec3) -> f64>(dim: usize, c: &Vec3, r: f64, spec: &QuadratureSpec, f: F) -> Result<f64> {
    let mut total = 0.0;
    for half in [HalfSpace::upper(dim), HalfSpace::lower(dim)] {
        if half.level(c) > -r {
            total += ball_integral(&half, c, r, spec, &f)?.value;
        }
    }
    Ok(total)
}

fn test_bump(y: &Vec3, c: &Vec3, r: f64) -> (f64, Vec3) {
    let d = (y - c) / r;
    let t2 = d.norm_squared();
    if t2 >= 1.0 {
        return (0.0, Vec3::zeros());
    }
    let q = 1.0 - t2;
    let v = (-1.0 / q).exp();
    (v, -2.0 * v / (q * q * r) * d)
}

/// `int A~ grad u~ . grad psi` for the bump `psi` on `B_r(c)`, over `||grad u~|| ||grad psi||`.
pub fn weak_residual(ext: &ExtendedField, c: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    let dim = ext.dim();
    if c.norm() + r > ext.radius {
        return Err(Error::Domain("test bump must lie inside the working ball".into()));
    }
    let flux = |y: &Vec3| -> f64 {
        let a = match ext.map.reflected(y) {
            Ok(a) => a,
            Err(_) => return f64::NAN,
        };
        let (_, gp) = test_bump(y, c, r);
        (a * ext.grad(y)).dot(&gp)
    };
    let num = split_ball_integral(dim, c, r, spec, flux)?;
    let gu = split_ball_integral(dim, c, r, spec, |y| ext.grad(y).norm_squared())?;
    let gp = split_ball_integral(dim, c, r, spec, |y| test_bump(y, c, r).1.norm_squared())?;
    let scale = (gu * gp).sqrt();
    if !(scale > 0.0) {
        return Err(Error::Degenerate("extension has no energy on the test bump".into()));
    }
    Ok(num / scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConormalJump {
    pub h: f64,
    /// Upper flux `A grad u~ . (0,-1)` at `s = h`.
    pub above: f64,
    /// Lower flux `A~ grad u~ . (0,1)` at `s = -h`.
    pub below: f64,
}

impl ConormalJump {
    pub fn jump(&self) -> f64 {
        self.above + self.below
    }
}

/// Co-normal fluxes from both sides at height `h` above and below `(x, 0)`.
pub fn conormal_jump(ext: &ExtendedField, x: &Vec2, h: f64) -> Result<ConormalJump> {
    if x.norm() + h > ext.radius {
        return Err(Error::Domain(format!("({x:?}, {h}) lies outside the working cylinder")));
    }
    let up = lift(x, h);
    let down = lift(x, -h);
    let a_up = ext.map.coefficient(&up)?;
    let a_down = ext.map.reflected(&down)?;
    let above = -(a_up * ext.try_grad(&up)?)[VERT];
    let below = (a_down * ext.try_grad(&down)?)[VERT];
    Ok(ConormalJump { h, above, below })
}

/// Jumps at `h, h/2, h/4`, the Richardson limit and the flux scale.
pub fn conormal_sequence(ext: &ExtendedField, x: &Vec2, h: f64) -> Result<(Vec<ConormalJump>, f64, f64)> {
    let seq: Vec<ConormalJump> = [1.0, 0.5, 0.25].iter().map(|k| conormal_jump(ext, x, h * k)).collect::<Result<_>>()?;
    let j: Vec<f64> = seq.iter().map(|c| c.jump()).collect();
    let r1 = 2.0 * j[1] - j[0];
    let r2 = 2.0 * j[2] - j[1];
    let extrapolated = (4.0 * r2 - r1) / 3.0;
    let scale = seq.iter().map(|c| c.above.abs()).fold(0.0, f64::max);
    Ok((seq, extrapolated, scale))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderCertificate {
    pub alpha: f64,
    pub constant: f64,
    pub pairs: usize,
    pub worst: (Vec3, Vec3),
    /// `(pair distance, ratio)` for every pair.
    pub samples: Vec<(f64, f64)>,
}

/// Pairs at distances `delta0 4^{-l}`, `l < levels`, exercising both `x` and `s`, anchored at `x = 0` and `x = delta0/3`.
pub fn holder_pairs(dim: usize, delta0: f64, levels: usize) -> Vec<(Vec3, Vec3)> {
    let mut out = Vec::new();
    let tdirs: Vec<Vec3> = if dim == 2 { vec![Vec3::x()] } else { vec![Vec3::x(), Vec3::y()] };
    for l in 0..levels {
        let d = delta0 * 0.25f64.powi(l as i32);
        for anchor in [Vec3::zeros(), Vec3::x() * (delta0 / 3.0)] {
            let e = Vec3::z();
            out.push((anchor, anchor + d * e));
            out.push((anchor - 0.5 * d * e, anchor + 0.5 * d * e));
            out.push((anchor + d * e, anchor + 2.0 * d * e));
            for t in &tdirs {
                out.push((anchor, anchor + d * t));
                out.push((anchor + d * e, anchor + d * e + d * t));
                out.push((anchor - d * e, anchor - d * e + d * t));
            }
        }
    }
    out
}

/// `sup ||A~(z1) - A~(z2)||_F / |z1 - z2|^alpha` over the pairs.
pub fn modulus_certificate(map: &StraighteningMap, alpha: f64, pairs: &[(Vec3, Vec3)]) -> Result<HolderCertificate> {
    if pairs.is_empty() {
        return Err(Error::Domain("no sample pairs".into()));
    }
    let mut constant: f64 = 0.0;
    let mut worst = pairs[0];
    let mut samples = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let dist = (a - b).norm();
        let ratio = (map.reflected(a)? - map.reflected(b)?).norm() / dist.powf(alpha);
        samples.push((dist, ratio));
        if ratio > constant {
            constant = ratio;
            worst = (*a, *b);
        }
    }
    Ok(HolderCertificate { alpha, constant, pairs: pairs.len(), worst, samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublingCertificate {
    pub sup: f64,
    pub center: Vec3,
    pub r: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingSearch {
    pub samples: usize,
    /// Smallest inner radius relative to the working radius.
    pub r_min_frac: f64,
    pub polish: usize,
    pub spec: QuadratureSpec,
}

impl Default for DoublingSearch {
    fn default() -> Self {
        Self { samples: 500, r_min_frac: 0.05, polish: 3, spec: QuadratureSpec { radial: 8, angular: 8, tol: 1e-7, max_depth: 10 } }
    }
}

/// `int_{B_2r(x)} |u - u(x)|^2 / int_{B_r(x)} |u - u(x)|^2`.
pub fn normalized_doubling(field: &dyn Field, x: &Vec3, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    let dim = field.dim();
    let ux = field.value(x);
    let f = |y: &Vec3| (field.value(y) - ux).powi(2);
    let small = split_ball_integral(dim, x, r, spec, f)?;
    if !(small > 0.0) {
        return Err(Error::Degenerate("field is constant on the inner ball".into()));
    }
    Ok(split_ball_integral(dim, x, 2.0 * r, spec, f)? / small)
}

/// Sup of the normalized doubling ratio over seeded samples `B_2r(x) inside B_R`, polished by compass search.
pub fn doubling_certificate(field: &dyn Field, radius: f64, search: &DoublingSearch, seed: u64) -> Result<DoublingCertificate> {
    let dim = field.dim();
    let r_min = search.r_min_frac * radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feasible = |x: &Vec3, r: f64| r >= r_min && x.norm() + 2.0 * r <= radius;
    let eval = |x: &Vec3, r: f64| -> f64 {
        if !feasible(x, r) {
            return f64::NEG_INFINITY;
        }
        normalized_doubling(field, x, r, &search.spec).unwrap_or(f64::NEG_INFINITY)
    };
    let mut cands: Vec<(f64, Vec3, f64)> = Vec::with_capacity(search.samples);
    while cands.len() < search.samples {
        let mut x = Vec3::zeros();
        for k in 0..3 {
            if dim == 2 && k == 1 {
                continue;
            }
            x[k] = rng.gen_range(-1.0..1.0) * radius;
        }
        let room = (radius - x.norm()) / 2.0;
        if x.norm() >= radius || room <= r_min {
            continue;
        }
        let r = rng.gen_range(r_min..room);
        let v = eval(&x, r);
        if !v.is_finite() {
            return Err(Error::Certificate { stage: "doubling".into(), detail: format!("ratio undefined at {x:?}, r = {r}") });
        }
        cands.push((v, x, r));
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    let axes: Vec<usize> = if dim == 2 { vec![0, VERT] } else { vec![0, 1, VERT] };
    let mut best = cands[0];
    let mut starts: Vec<(f64, Vec3, f64)> = Vec::new();
    for c in &cands {
        if starts.len() == search.polish {
            break;
        }
        if starts.iter().all(|s| (s.1 - c.1).norm() + (s.2 - c.2).abs() > 0.1 * radius) {
            starts.push(*c);
        }
    }
    for (v0, x0, r0) in starts {
        let (mut v, mut x, mut r) = (v0, x0, r0);
        let mut step = 0.05 * radius;
        while step > 1e-4 * radius {
            let mut moved = false;
            for k in 0..=axes.len() {
                for sgn in [1.0, -1.0] {
                    let (mut xt, mut rt) = (x, r);
                    if k < axes.len() {
                        xt[axes[k]] += sgn * step;
                    } else {
                        rt += sgn * step;
                    }
                    rt = rt.min((radius - xt.norm()) / 2.0);
                    if rt == r && xt == x {
                        continue;
                    }
                    let vt = eval(&xt, rt);
                    if vt > v {
                        (v, x, r) = (vt, xt, rt);
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        if v > best.0 {
            best = (v, x, r);
        }
    }
    Ok(DoublingCertificate { sup: best.0, center: best.1, r: best.2, samples: cands.len(), seed })
}
