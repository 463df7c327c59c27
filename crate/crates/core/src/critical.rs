use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{doubling_ratios, frequency_report};
use crate::geometry::{Admissibility, DiniParameter, GraphDomain};
use crate::harmonic::Field;
use crate::quadrature::QuadratureSpec;
use crate::space::{pad_planar, Region, Vec2, Vec3, VERT};
use crate::straighten::{
    doubling_certificate, holder_pairs, modulus_certificate, working_radius, DoublingCertificate, DoublingSearch,
    ExtendedField, HolderCertificate, StraighteningMap, WorkingBall,
};

/// Closed search set: a box, optionally intersected with a ball and with `{level >= 0}` of a region.
#[derive(Clone, Copy)]
pub struct SearchRegion<'a> {
    pub dim: usize,
    pub lo: Vec3,
    pub hi: Vec3,
    pub ball: Option<(Vec3, f64)>,
    pub domain: Option<&'a dyn Region>,
}

impl<'a> SearchRegion<'a> {
    pub fn boxed(dim: usize, lo: Vec3, hi: Vec3) -> Self {
        let (mut lo, mut hi) = (lo, hi);
        if dim == 2 {
            lo[1] = 0.0;
            hi[1] = 0.0;
        }
        Self { dim, lo, hi, ball: None, domain: None }
    }

    pub fn ball(dim: usize, center: Vec3, r: f64) -> Self {
        let mut s = Self::boxed(dim, center - Vec3::repeat(r), center + Vec3::repeat(r));
        s.ball = Some((center, r));
        s
    }

    pub fn within(mut self, domain: &'a dyn Region) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn axes(&self) -> &'static [usize] {
        if self.dim == 2 {
            &[0, VERT]
        } else {
            &[0, 1, 2]
        }
    }

    pub fn diameter(&self) -> f64 {
        let d = (self.hi - self.lo).norm();
        match self.ball {
            Some((_, r)) => d.min(2.0 * r),
            None => d,
        }
    }

    /// Membership in the set thickened by `tol`.
    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        for &k in self.axes() {
            if p[k] < self.lo[k] - tol || p[k] > self.hi[k] + tol {
                return false;
            }
        }
        if let Some((c, r)) = self.ball {
            if (p - c).norm() > r + tol {
                return false;
            }
        }
        if let Some(d) = self.domain {
            let g = d.level_grad(p).norm().max(1e-300);
            if d.level(p) / g < -tol {
                return false;
            }
        }
        true
    }

    pub fn describe(&self) -> String {
        let mut s = format!("box [{:?}, {:?}]", self.lo.as_slice(), self.hi.as_slice());
        if let Some((c, r)) = self.ball {
            s.push_str(&format!(" & ball({:?}, {r})", c.as_slice()));
        }
        if self.domain.is_some() {
            s.push_str(" & closed domain");
        }
        s
    }

    /// Grid points with at most `spacing` between neighbours, with their integer indices.
    fn lattice(&self, spacing: f64) -> (Vec<usize>, Vec<Vec3>) {
        let mut n = vec![1usize; 3];
        for &k in self.axes() {
            n[k] = ((self.hi[k] - self.lo[k]) / spacing).ceil().max(1.0) as usize + 1;
        }
        let mut pts = Vec::with_capacity(n[0] * n[1] * n[2]);
        let coord = |k: usize, i: usize| {
            if n[k] == 1 {
                self.lo[k]
            } else {
                self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (n[k] - 1) as f64
            }
        };
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    pts.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
                }
            }
        }
        (n, pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalSpec {
    /// Acceptance `|grad u| <= grad_tol * max |grad u|`.
    pub grad_tol: f64,
    /// Seeds with `|grad u| <= capture * max |grad u|` are refined, as are discrete local minima.
    pub capture: f64,
    /// Singular if `|u| <= value_tol * max |u|`.
    pub value_tol: f64,
    /// Deduplication radius relative to the region diameter.
    pub dedup: f64,
    pub max_iter: usize,
}

impl Default for CriticalSpec {
    fn default() -> Self {
        Self { grad_tol: 1e-10, capture: 1e-2, value_tol: 1e-8, dedup: 1e-6, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Singular,
    Critical,
}

impl PointClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointClass::Singular => "singular",
            PointClass::Critical => "critical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub point: Vec3,
    pub grad_norm: f64,
    pub value: f64,
    pub class: PointClass,
    /// The Hessian was rank deficient somewhere along the iteration.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct CriticalSetEstimate {
    pub points: Vec<CriticalPoint>,
    pub grad_scale: f64,
    pub value_scale: f64,
    pub seeds: usize,
    pub refined: usize,
    pub region: String,
}

impl CriticalSetEstimate {
    pub fn singular(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|p| p.class == PointClass::Singular)
    }
}

/// Damped Newton on `grad u = 0` with an SVD solve; returns the last iterate and whether a rank-deficient Hessian was met.
pub fn newton_refine(field: &dyn Field, p0: &Vec3, max_iter: usize) -> Option<(Vec3, bool)> {
    let dim = field.dim();
    let mut p = *p0;
    let mut fallback = false;
    for _ in 0..max_iter {
        let jet = field.jet(&p);
        let g = jet.grad;
        if !g.iter().all(|v| v.is_finite()) || !jet.hess.iter().all(|v| v.is_finite()) {
            return None;
        }
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        let mut h = jet.hess;
        pad_planar(&mut h, dim);
        let svd = h.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let mut step = if smax > 0.0 {
            if smin < 1e-12 * smax {
                fallback = true;
            }
            -svd.solve(&g, 1e-12 * smax).ok()?
        } else {
            fallback = true;
            -g
        };
        if dim == 2 {
            step[1] = 0.0;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let q = p + t * step;
            let gq = field.grad(&q).norm();
            if gq.is_finite() && gq < gn {
                accepted = Some(q);
                break;
            }
            t *= 0.5;
        }
        let Some(q) = accepted else { break };
        let moved = (q - p).norm();
        p = q;
        if moved <= 1e-15 * (1.0 + p.norm()) {
            break;
        }
    }
    Some((p, fallback))
}

fn lex(a: &Vec3, b: &Vec3) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

/// Newton-refined zeros of `grad u` in the closed search region, seeded from a lattice.
pub fn find_critical_points(field: &dyn Field, region: &SearchRegion, spacing: f64, spec: &CriticalSpec) -> Result<CriticalSetEstimate> {
    if field.dim() != region.dim {
        return Err(Error::Domain(format!("field has dimension {}, region {}", field.dim(), region.dim)));
    }
    if !(spacing > 0.0) {
        return Err(Error::Domain(format!("seed spacing must be positive, got {spacing}")));
    }
    let (n, pts) = region.lattice(spacing);
    let norms: Vec<f64> = pts
        .par_iter()
        .map(|p| if region.contains(p, 0.0) { field.grad(p).norm() } else { f64::NAN })
        .collect();
    let values: Vec<f64> = pts.iter().zip(&norms).map(|(p, g)| if g.is_nan() { 0.0 } else { field.value(p).abs() }).collect();
    let grad_scale = norms.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let value_scale = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let seeds = norms.iter().filter(|v| !v.is_nan()).count();
    if seeds == 0 {
        return Err(Error::Domain(format!("no seeds inside {}", region.describe())));
    }
    let index = |i: usize, j: usize, k: usize| (i * n[1] + j) * n[2] + k;
    let mut chosen = Vec::new();
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let g = norms[index(i, j, k)];
                if !g.is_finite() {
                    continue;
                }
                let mut local_min = true;
                for (a, len) in [(0usize, n[0]), (1, n[1]), (2, n[2])] {
                    for delta in [-1i64, 1] {
                        let mut c = [i as i64, j as i64, k as i64];
                        c[a] += delta;
                        if c[a] < 0 || c[a] >= len as i64 {
                            continue;
                        }
                        let other = norms[index(c[0] as usize, c[1] as usize, c[2] as usize)];
                        if other < g {
                            local_min = false;
                        }
                    }
                }
                if local_min || g <= spec.capture * grad_scale {
                    chosen.push(pts[index(i, j, k)]);
                }
            }
        }
    }
    let tol = spec.grad_tol * grad_scale;
    let dedup = spec.dedup * region.diameter();
    let mut found: Vec<(Vec3, bool, f64)> = chosen
        .par_iter()
        .filter_map(|p| newton_refine(field, p, spec.max_iter))
        .filter_map(|(q, fb)| {
            let g = field.grad(&q).norm();
            (g <= tol && region.contains(&q, dedup)).then_some((q, fb, g))
        })
        .collect();
    found.sort_by(|a, b| lex(&a.0, &b.0));
    let mut kept: Vec<(Vec3, bool, f64)> = Vec::new();
    for f in found {
        match kept.iter_mut().find(|k| (k.0 - f.0).norm() <= dedup) {
            Some(k) => {
                if f.2 < k.2 {
                    *k = f;
                }
            }
            None => kept.push(f),
        }
    }
    kept.sort_by(|a, b| lex(&a.0, &b.0));
    let points = kept
        .into_iter()
        .map(|(point, fallback, grad_norm)| {
            let value = field.value(&point);
            let class = if value.abs() <= spec.value_tol * value_scale { PointClass::Singular } else { PointClass::Critical };
            CriticalPoint { point, grad_norm, value, class, fallback }
        })
        .collect();
    Ok(CriticalSetEstimate { points, grad_scale, value_scale, seeds, refined: chosen.len(), region: region.describe() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentSpec {
    /// Coarsest cells are about `extent / coarse` wide.
    pub coarse: usize,
    /// Finest cells are `r / fine` wide.
    pub fine: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for ContentSpec {
    fn default() -> Self {
        Self { coarse: 8, fine: 8, grad_tol: 1e-10, max_iter: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentFlag {
    Empty,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentSample {
    pub r: f64,
    pub threshold: f64,
    /// Size of a greedy `r/2`-net of the (projected) sublevel set.
    pub count: usize,
    /// `count * r^{d-2}`.
    pub count_r_pow: f64,
    pub flag: Option<ContentFlag>,
}

#[derive(Debug, Clone)]
pub struct ContentEstimate {
    /// Median spectral norm of the Hessian over the region.
    pub hess_scale: f64,
    pub samples: Vec<ContentSample>,
}

/// Greedy `r/2`-net of `{|grad u| <= r * median |Hess u|}` after Newton projection onto the zero set.
pub fn minkowski_content(field: &dyn Field, region: &SearchRegion, radii: &[f64], spec: &ContentSpec) -> Result<ContentEstimate> {
    let dim = region.dim;
    if field.dim() != dim {
        return Err(Error::Domain(format!("field has dimension {}, region {}", field.dim(), dim)));
    }
    let axes = region.axes();
    let extent = axes.iter().map(|&k| region.hi[k] - region.lo[k]).fold(0.0, f64::max);
    let (_, probe) = region.lattice(extent / 16.0);
    let probe: Vec<Vec3> = probe.into_iter().filter(|p| region.contains(p, 0.0)).collect();
    if probe.is_empty() {
        return Err(Error::Domain(format!("empty region {}", region.describe())));
    }
    let mut hess: Vec<f64> = Vec::with_capacity(probe.len());
    let mut grad_scale: f64 = 0.0;
    for p in &probe {
        let jet = field.jet(p);
        let mut h = jet.hess;
        if dim == 2 {
            for k in 0..3 {
                h[(1, k)] = 0.0;
                h[(k, 1)] = 0.0;
            }
        }
        let e = h.symmetric_eigenvalues();
        hess.push(e.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        grad_scale = grad_scale.max(jet.grad.norm());
    }
    let lip = 2.0 * hess.iter().copied().fold(0.0, f64::max);
    hess.sort_by(f64::total_cmp);
    let hess_scale = hess[hess.len() / 2];
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("covering radius must be positive, got {r}")));
        }
        let threshold = r * hess_scale;
        let h_fine = r / spec.fine as f64;
        let mut h = h_fine;
        while 2.0 * h * spec.coarse as f64 <= extent {
            h *= 2.0;
        }
        let mut n = [1usize; 3];
        for &k in axes {
            n[k] = ((region.hi[k] - region.lo[k]) / h).ceil().max(1.0) as usize;
        }
        let mut cells = Vec::new();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let mut c = region.lo;
                    for (a, idx) in [(0usize, i), (1, j), (2, k)] {
                        if axes.contains(&a) {
                            c[a] += (idx as f64 + 0.5) * h;
                        }
                    }
                    cells.push(c);
                }
            }
        }
        let coarse_inside: Vec<&Vec3> = cells.iter().filter(|c| region.contains(c, 0.0)).collect();
        let full = !coarse_inside.is_empty() && coarse_inside.iter().all(|c| field.grad(c).norm() <= threshold);
        loop {
            let last = h <= h_fine * (1.0 + 1e-12);
            let slack = if last { 0.0 } else { 0.5 * h * (dim as f64).sqrt() };
            cells = cells
                .into_par_iter()
                .filter(|c| region.contains(c, slack) && field.grad(c).norm() <= threshold + lip * slack)
                .collect();
            if last {
                break;
            }
            h *= 0.5;
            let q = 0.5 * h;
            let offsets: Vec<Vec3> = if dim == 2 {
                vec![Vec3::new(-q, 0.0, -q), Vec3::new(-q, 0.0, q), Vec3::new(q, 0.0, -q), Vec3::new(q, 0.0, q)]
            } else {
                let mut v = Vec::new();
                for a in [-q, q] {
                    for b in [-q, q] {
                        for c in [-q, q] {
                            v.push(Vec3::new(a, b, c));
                        }
                    }
                }
                v
            };
            cells = cells.iter().flat_map(|c| offsets.iter().map(move |o| c + o)).collect();
        }
        let tol = spec.grad_tol * grad_scale;
        let mut projected: Vec<Vec3> = cells
            .par_iter()
            .map(|c| match newton_refine(field, c, spec.max_iter) {
                Some((q, _)) if field.grad(&q).norm() <= tol && region.contains(&q, 1e-12 * extent) => q,
                _ => *c,
            })
            .collect();
        projected.sort_by(lex);
        let count = greedy_net(&projected, 0.5 * r);
        let flag = if cells.is_empty() {
            Some(ContentFlag::Empty)
        } else if full {
            Some(ContentFlag::Full)
        } else {
            None
        };
        samples.push(ContentSample { r, threshold, count, count_r_pow: count as f64 * r.powi(dim as i32 - 2), flag });
    }
    Ok(ContentEstimate { hess_scale, samples })
}

/// Size of the greedy subset whose points are pairwise at least `sep` apart.
pub fn greedy_net(points: &[Vec3], sep: f64) -> usize {
    let key = |p: &Vec3| ((p.x / sep).floor() as i64, (p.y / sep).floor() as i64, (p.z / sep).floor() as i64);
    let mut grid: HashMap<(i64, i64, i64), Vec<Vec3>> = HashMap::new();
    let mut count = 0;
    let cut = sep * (1.0 - 1e-9);
    for p in points {
        let (a, b, c) = key(p);
        let mut covered = false;
        'search: for i in a - 1..=a + 1 {
            for j in b - 1..=b + 1 {
                for k in c - 1..=c + 1 {
                    if let Some(v) = grid.get(&(i, j, k)) {
                        if v.iter().any(|q| (q - p).norm() < cut) {
                            covered = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        if !covered {
            grid.entry((a, b, c)).or_default().push(*p);
            count += 1;
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub moll_pts: usize,
    pub working_grid: usize,
    pub doubling: DoublingSearch,
    pub holder_levels: usize,
    pub seed_spacing_rel: f64,
    pub critical: CriticalSpec,
    /// Covering radii relative to the working radius.
    pub content_radii_rel: Vec<f64>,
    pub content: ContentSpec,
    /// Chart centres, tangential coordinates relative to the working radius.
    pub charts: Vec<[f64; 2]>,
    pub quad: QuadratureSpec,
    pub seed: u64,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        Self {
            moll_pts: 96,
            working_grid: 16,
            doubling: DoublingSearch::default(),
            holder_levels: 4,
            seed_spacing_rel: 0.1,
            critical: CriticalSpec::default(),
            content_radii_rel: vec![0.1, 0.05],
            content: ContentSpec::default(),
            charts: vec![[0.0, 0.0]],
            quad: QuadratureSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub admissibility: Admissibility,
    /// Standard frequency `N(0, 5R)`.
    pub lambda: f64,
    /// Sup of the boundary-layer doubling ratios of `u`.
    pub doubling_u: f64,
    pub working: WorkingBall,
    pub doubling_ext: DoublingCertificate,
    pub holder: HolderCertificate,
    pub critical: CriticalSetEstimate,
    /// Largest `|grad u(G(y))|` over detected points with `s > 0`, relative to the gradient scale.
    pub pullback: f64,
    /// Largest distance from a detected point off `{s = 0}` to the mirror of another.
    pub mirror_gap: f64,
    /// Counts summed over charts, per covering radius.
    pub content: Vec<ContentSample>,
}

fn stage(name: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Certificate { stage: name.into(), detail: e.to_string() }
}

/// Admissibility, frequency bound, doubling for `u` and `u~`, Hölder modulus of `A~`, and critical-set detection/content for `u~`.
pub fn theorem_pipeline(domain: &GraphDomain, field: &dyn Field, spec: &PipelineSpec) -> Result<PipelineReport> {
    let dim = domain.dim();
    let big_r = domain.radius;
    let admissibility = domain.admissibility(big_r);
    if !admissibility.admissible {
        return Err(Error::Certificate {
            stage: "admissibility".into(),
            detail: format!("theta(8R) = {:.3e}, int_0^16R theta/s = {:.3e}", admissibility.theta_8r, admissibility.integral_16r),
        });
    }
    let origin = Vec3::zeros();
    let lambda = frequency_report(field, domain, &origin, 5.0 * big_r, &spec.quad).map_err(stage("frequency"))?.n_s;
    if !lambda.is_finite() {
        return Err(Error::Certificate { stage: "frequency".into(), detail: format!("N(0, 5R) = {lambda}") });
    }
    let normal = domain.normal(&Vec2::zeros());
    let mut doubling_u: f64 = 0.0;
    for h in [big_r / 160.0, big_r / 80.0, big_r / 41.0] {
        for rho in [big_r / 64.0, big_r / 32.0] {
            let rep = doubling_ratios(field, domain, &(h * normal), rho, 2.0, &spec.quad).map_err(stage("doubling-u"))?;
            doubling_u = doubling_u.max(rep.ratio);
        }
    }
    if !doubling_u.is_finite() {
        return Err(Error::Certificate { stage: "doubling-u".into(), detail: "ratio is not finite".into() });
    }
    let map = StraighteningMap::new(domain.clone(), spec.moll_pts).map_err(stage("straighten"))?;
    let working = working_radius(&map, big_r, spec.working_grid).map_err(stage("working-ball"))?;
    let ext = ExtendedField::new(field, &map, working.radius);
    let doubling_ext = doubling_certificate(&ext, working.radius, &spec.doubling, spec.seed).map_err(stage("doubling-ext"))?;
    let alpha = match domain.dini {
        DiniParameter::Holder { alpha, .. } => alpha,
        _ => 1.0,
    };
    let holder = modulus_certificate(&map, alpha, &holder_pairs(dim, working.radius / 4.0, spec.holder_levels))
        .map_err(stage("holder"))?;
    if !holder.constant.is_finite() {
        return Err(Error::Certificate { stage: "holder".into(), detail: "modulus is not finite".into() });
    }
    let half = working.radius / 2.0;
    let region = SearchRegion::ball(dim, origin, half);
    let critical = find_critical_points(&ext, &region, spec.seed_spacing_rel * half, &spec.critical).map_err(stage("critical"))?;
    let mut pullback: f64 = 0.0;
    let mut mirror_gap: f64 = 0.0;
    let dedup = spec.critical.dedup * region.diameter();
    for p in &critical.points {
        let y = p.point;
        if y[VERT].abs() <= dedup {
            continue;
        }
        let mut m = y;
        m[VERT] = -m[VERT];
        let gap = critical.points.iter().map(|q| (q.point - m).norm()).fold(f64::INFINITY, f64::min);
        mirror_gap = mirror_gap.max(gap);
        if y[VERT] > 0.0 {
            let g = field.grad(&map.map(&y).map_err(stage("pullback"))?).norm();
            pullback = pullback.max(g / critical.grad_scale);
        }
    }
    let mut content: Vec<ContentSample> = Vec::new();
    let radii: Vec<f64> = spec.content_radii_rel.iter().map(|f| f * working.radius).collect();
    for chart in &spec.charts {
        let mut c = Vec3::zeros();
        c[0] = chart[0] * working.radius;
        if dim == 3 {
            c[1] = chart[1] * working.radius;
        }
        let r_chart = half - c.norm();
        if r_chart <= 0.0 {
            return Err(Error::Certificate { stage: "content".into(), detail: format!("chart centre {c:?} outside the half working ball") });
        }
        let est = minkowski_content(&ext, &SearchRegion::ball(dim, c, r_chart), &radii, &spec.content).map_err(stage("content"))?;
        if content.is_empty() {
            content = est.samples;
        } else {
            for (acc, s) in content.iter_mut().zip(est.samples) {
                acc.count += s.count;
                acc.count_r_pow += s.count_r_pow;
            }
        }
    }
    Ok(PipelineReport {
        admissibility,
        lambda,
        doubling_u,
        working,
        doubling_ext,
        holder,
        critical,
        pullback,
        mirror_gap,
        content,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::harmonic::{exact_polynomial, graph_adapted, simon_fixture, solve_mfs, MfsSpec, Polynomial};
    use crate::space::point3;

    fn quick_pipeline() -> PipelineSpec {
        PipelineSpec {
            doubling: DoublingSearch { samples: 24, polish: 1, ..Default::default() },
            holder_levels: 3,
            content_radii_rel: vec![0.2],
            ..Default::default()
        }
    }

    #[test]
    fn im_z3_has_one_critical_point() {
        let flat = GraphDomain::flat(2);
        let region = SearchRegion::ball(2, Vec3::zeros(), 1.0).within(&flat);
        let est = find_critical_points(&Polynomial::im_z(3), &region, 0.1, &CriticalSpec::default()).unwrap();
        assert_eq!(est.points.len(), 1);
        assert!(est.points[0].point.norm() <= 1e-8);
        assert_eq!(est.points[0].class, PointClass::Singular);
    }

    #[test]
    fn linear_field_has_none() {
        let u = Polynomial::new(2, vec![(1.0, [0, 0, 1])]);
        let est = find_critical_points(&u, &SearchRegion::ball(2, Vec3::zeros(), 1.0), 0.1, &CriticalSpec::default()).unwrap();
        assert!(est.points.is_empty());
    }

    #[test]
    fn simon_points_and_classes() {
        let fx = simon_fixture(0.3, 12.0).unwrap();
        let region = SearchRegion::boxed(3, point3(-1.0, -1.0, -12.0), point3(1.0, 1.0, 12.0));
        let est = find_critical_points(&fx.field, &region, 0.25, &CriticalSpec::default()).unwrap();
        assert_eq!(est.points.len(), fx.critical.len());
        for (found, want) in est.points.iter().zip(&fx.critical) {
            // z_k = k pi / 0.6
            let z = want.k as f64 * std::f64::consts::PI / 0.6;
            assert!((found.point - point3(0.0, 0.0, z)).norm() <= 1e-8, "{:?}", found.point);
            assert_eq!(found.class == PointClass::Singular, want.k % 2 == 0);
        }
        assert!(est.singular().count() == 3);
    }

    #[test]
    fn halving_seed_spacing_is_stable() {
        let u = Polynomial::im_z(3).add(Polynomial::im_z(5).scale(0.1));
        let region = SearchRegion::ball(2, Vec3::zeros(), 1.0);
        let a = find_critical_points(&u, &region, 0.1, &CriticalSpec::default()).unwrap();
        let b = find_critical_points(&u, &region, 0.05, &CriticalSpec::default()).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.point - q.point).norm() <= 2e-6);
            // no zeros outside B_1 are reported
            assert!(p.point.norm() <= 1.0 + 2e-6);
        }
    }

    #[test]
    fn greedy_net_on_a_segment() {
        let pts: Vec<Vec3> = (0..=400).map(|i| point3(0.0, -1.0 + i as f64 / 200.0, 0.0)).collect();
        // separation 0.1 over length 2: 21 points
        assert_eq!(greedy_net(&pts, 0.1), 21);
    }

    #[test]
    fn line_content_for_x1x3() {
        let u = Polynomial::new(3, vec![(1.0, [1, 0, 1])]);
        let region = SearchRegion::ball(3, Vec3::zeros(), 1.0);
        let est = minkowski_content(&u, &region, &[0.1, 0.05, 0.025], &ContentSpec::default()).unwrap();
        assert!((est.hess_scale - 1.0).abs() < 1e-12);
        // the zero set meets B_1 in a segment of length 2; an r/2-net has about 2L/r points
        let oracle = 2.0 * 2.0;
        for s in &est.samples {
            assert!(s.flag.is_none());
            assert!((s.count_r_pow / oracle - 1.0).abs() < 0.15, "{s:?}");
        }
    }

    #[test]
    fn content_of_empty_and_isolated_sets() {
        let u = Polynomial::new(3, vec![(1.0, [0, 0, 1])]);
        let est = minkowski_content(&u, &SearchRegion::ball(3, Vec3::zeros(), 1.0), &[0.1], &ContentSpec::default()).unwrap();
        assert_eq!(est.samples[0].count, 0);
        assert_eq!(est.samples[0].flag, Some(ContentFlag::Empty));
        let fx = simon_fixture(0.3, 12.0).unwrap();
        let region = SearchRegion::boxed(3, point3(-1.0, -1.0, -12.0), point3(1.0, 1.0, 12.0));
        let est = minkowski_content(&fx.field, &region, &[0.2, 0.1], &ContentSpec::default()).unwrap();
        for s in &est.samples {
            assert_eq!(s.count, fx.critical.len(), "{s:?}");
        }
        assert!(est.samples[1].count_r_pow < est.samples[0].count_r_pow);
    }

    #[test]
    fn pipeline_on_flat_2xy() {
        let d = GraphDomain::flat(2);
        let u = exact_polynomial(2, 2).unwrap();
        let rep = theorem_pipeline(&d, &u, &quick_pipeline()).unwrap();
        assert!(rep.admissibility.admissible);
        assert!((rep.lambda - 2.0).abs() < 1e-6);
        assert!(rep.doubling_u.is_finite() && rep.doubling_ext.sup.is_finite());
        assert!(rep.holder.constant < 1e-12);
        assert_eq!(rep.critical.points.len(), 1);
        assert!(rep.critical.points[0].point.norm() < 1e-8);
        assert_eq!(rep.mirror_gap, 0.0);
        assert_eq!(rep.content[0].count, 1);
    }

    #[test]
    fn pipeline_on_bump() {
        let d = GraphDomain::new(2, Shape::QuadraticBump { a: 0.05 }, 0.015).unwrap();
        let u = exact_polynomial(2, 2).unwrap();
        let f = solve_mfs(&d, &MfsSpec { window: 0.12, ..Default::default() }, &graph_adapted(&d, &u)).unwrap();
        let rep = theorem_pipeline(&d, &f, &quick_pipeline()).unwrap();
        assert!(rep.lambda.is_finite() && rep.lambda > 0.0);
        assert!(rep.holder.constant > 0.0 && rep.holder.constant.is_finite());
        assert!(rep.pullback <= 1e-8, "{}", rep.pullback);
        assert!(rep.mirror_gap <= 1e-6 || rep.critical.points.iter().all(|p| p.point[VERT].abs() < 1e-6));
    }

    #[test]
    fn pipeline_rejects_inadmissible_radius() {
        let d = GraphDomain::new(2, Shape::QuadraticBump { a: 0.3 }, 0.5).unwrap();
        let u = exact_polynomial(2, 2).unwrap();
        match theorem_pipeline(&d, &u, &quick_pipeline()) {
            Err(Error::Certificate { stage, .. }) => assert_eq!(stage, "admissibility"),
            other => panic!("{other:?}"),
        }
    }
}
