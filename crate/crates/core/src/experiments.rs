use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, FieldKind};
use crate::conformal2d::{build_map, transfer_count, MapSpec};
use crate::critical::{find_critical_points, theorem_pipeline, CriticalSetEstimate, CriticalSpec, PipelineSpec, SearchRegion};
use crate::error::Error;
use crate::frequency::{
    derivative_terms, doubling_ratios, frequency_derivative_fd, pinch_integral, spatial_variation_check,
};
use crate::geometry::{DiniParameter, GraphDomain};
use crate::harmonic::{graph_adapted, simon_fixture, solve_mfs, Field, SimonField};
use crate::report::{coord_header, coords, line_plot, num, scatter, Table};
use crate::space::{point3, Region, Vec2, Vec3, VERT};
use crate::straighten::{conormal_sequence, holder_pairs, modulus_certificate, weak_residual, working_radius, ExtendedField, StraighteningMap};

/// A module error with the operation and parameters that raised it.
#[derive(Debug, Clone)]
pub struct RunError {
    pub module: &'static str,
    pub operation: &'static str,
    pub params: String,
    pub source: Error,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}::{} [{}]: {}", self.module, self.operation, self.params, self.source)
    }
}

impl std::error::Error for RunError {}

fn at(module: &'static str, operation: &'static str, params: impl FnOnce() -> String) -> impl FnOnce(Error) -> RunError {
    move |source| RunError { module, operation, params: params(), source }
}

type Run<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.into(), pass, detail }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn table(&mut self, dir: &Path, name: &str, t: &Table) -> Run<()> {
        let p = dir.join(name);
        t.write(&p).map_err(at("report", "write_csv", || p.display().to_string()))?;
        self.files.push(p);
        Ok(())
    }

    fn svg(&mut self, dir: &Path, name: &str, s: &crate::report::Svg) -> Run<()> {
        let p = dir.join(name);
        s.write(&p).map_err(at("report", "write_svg", || p.display().to_string()))?;
        self.files.push(p);
        Ok(())
    }
}

fn build_field(cfg: &ExperimentConfig, domain: &GraphDomain) -> Run<Box<dyn Field>> {
    let dim = domain.dim();
    match cfg.field.kind {
        FieldKind::Simon => Ok(Box::new(SimonField { epsilon: cfg.field.epsilon })),
        FieldKind::Poly => Ok(Box::new(cfg.field.polynomial(dim).map_err(at("config", "field", || format!("{:?}", cfg.field)))?)),
        FieldKind::Mfs => {
            let p = cfg.field.polynomial(dim).map_err(at("config", "field", || format!("{:?}", cfg.field)))?;
            let data = graph_adapted(domain, &p);
            let f = solve_mfs(domain, &cfg.mfs, &data).map_err(at("harmonic", "solve_mfs", || format!("{:?}, {:?}", domain.shape, cfg.mfs)))?;
            Ok(Box::new(f))
        }
    }
}

/// Runs the configured experiment, writing CSV (and SVG with `output.plot`) into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Run<RunReport> {
    cfg.validate().map_err(at("config", "validate", || cfg.experiment.name().into()))?;
    let domain = cfg.domain.build().map_err(at("config", "domain", || format!("{:?}", cfg.domain)))?;
    let field = build_field(cfg, &domain)?;
    let centers = cfg.sweep.center_points(domain.dim()).map_err(at("config", "sweep", || format!("{:?}", cfg.sweep.centers)))?;
    let mut rep = RunReport::default();
    let f = field.as_ref();
    match cfg.experiment {
        Experiment::FreqSweep => freq_sweep(cfg, &domain, f, &centers, out, &mut rep)?,
        Experiment::Doubling => doubling(cfg, &domain, f, &centers, out, &mut rep)?,
        Experiment::DerivativeCheck => derivative_check(cfg, &domain, f, &centers, out, &mut rep)?,
        Experiment::StraightenVerify => straighten_verify(cfg, &domain, f, &centers, out, &mut rep)?,
        Experiment::CriticalPipeline => critical_pipeline(cfg, &domain, f, out, &mut rep)?,
        Experiment::ConformalCount => conformal_count(cfg, &domain, f, out, &mut rep)?,
        Experiment::SpvarFit => spvar_fit(cfg, &domain, f, &centers, out, &mut rep)?,
        Experiment::Simon => simon(cfg, out, &mut rep)?,
    }
    Ok(rep)
}

fn grid(centers: &[Vec3], radii: &[f64]) -> Vec<(Vec3, f64)> {
    centers.iter().flat_map(|c| radii.iter().map(move |r| (*c, *r))).collect()
}

fn is_homogeneous(cfg: &ExperimentConfig, domain: &GraphDomain) -> bool {
    cfg.field.kind == FieldKind::Poly && cfg.field.terms.is_empty() && domain.dini.is_zero()
}

fn freq_sweep(cfg: &ExperimentConfig, domain: &GraphDomain, f: &dyn Field, centers: &[Vec3], out: &Path, rep: &mut RunReport) -> Run<()> {
    let dim = domain.dim();
    let q = &cfg.quad;
    let rows: Vec<_> = grid(centers, &cfg.sweep.radii)
        .into_par_iter()
        .map(|(c, r)| -> Run<_> {
            let t = derivative_terms(f, domain, &c, r, q).map_err(at("frequency", "derivative_terms", || format!("center {c:?}, r {r}")))?;
            let w = if domain.level(&c) > 1.5 * r {
                pinch_integral(f, domain, &c, r, q).map_err(at("frequency", "pinch_integral", || format!("center {c:?}, r {r}")))?
            } else {
                f64::NAN
            };
            Ok((c, r, t, w))
        })
        .collect::<Run<_>>()?;
    let mut header = coord_header("center", dim);
    header.extend(["r", "D", "H_S", "H_C", "N_S", "N_C", "R_h", "R_b", "Err_r", "W", "quad_err"].map(String::from));
    let mut table = Table::with_header(header);
    for (c, r, t, w) in &rows {
        let mut row = coords(c, dim);
        let m = &t.report;
        row.extend([num(*r), num(m.energy), num(m.h_s), num(m.h_c), num(m.n_s), num(m.n_c), num(t.r_h), num(t.r_b), num(t.err_r), num(*w), num(m.quad_err)]);
        table.push(row);
    }
    rep.table(out, "frequency.csv", &table)?;
    rep.checks.push(Check::new("finite", rows.iter().all(|x| x.2.report.n_c.is_finite()), format!("{} points", rows.len())));
    let mut worst: f64 = 0.0;
    for c in centers {
        let seq: Vec<_> = rows.iter().filter(|x| x.0 == *c && x.1 < x.2.dist).map(|x| (x.1, x.2.report.n_c)).collect();
        for w in seq.windows(2) {
            if w[1].0 > w[0].0 {
                worst = worst.max(w[0].1 - w[1].1);
            }
        }
    }
    rep.checks.push(Check::new("interior monotonicity", worst <= 1e-5, format!("max decrease {worst:.3e}")));
    if is_homogeneous(cfg, domain) {
        let k = cfg.field.degree as f64;
        let dev = rows.iter().filter(|x| x.0.norm() == 0.0).map(|x| (x.2.report.n_c - k).abs()).fold(0.0, f64::max);
        rep.checks.push(Check::new("homogeneous frequency", dev <= 1e-6, format!("max |N_C - {k}| = {dev:.3e} at the origin")));
    }
    if cfg.output.plot {
        let series: Vec<(String, Vec<(f64, f64)>)> = centers
            .iter()
            .map(|c| (format!("N_C at {:?}", coords(c, dim)), rows.iter().filter(|x| x.0 == *c).map(|x| (x.1, x.2.report.n_c)).collect()))
            .collect();
        rep.svg(out, "frequency.svg", &line_plot(&series, "r", "N_C"))?;
    }
    Ok(())
}

fn doubling(cfg: &ExperimentConfig, domain: &GraphDomain, f: &dyn Field, centers: &[Vec3], out: &Path, rep: &mut RunReport) -> Run<()> {
    let dim = domain.dim();
    let pts: Vec<(Vec3, f64, f64)> = grid(centers, &cfg.sweep.radii).into_iter().flat_map(|(c, r)| cfg.sweep.a_factors.iter().map(move |a| (c, r, *a))).collect();
    let rows: Vec<_> = pts
        .into_par_iter()
        .map(|(c, rho, a)| doubling_ratios(f, domain, &c, rho, a, &cfg.quad).map(|d| (c, d)).map_err(at("frequency", "doubling_ratios", || format!("center {c:?}, rho {rho}, a {a}"))))
        .collect::<Run<_>>()?;
    let mut header = coord_header("center", dim);
    header.extend(["rho", "a", "ratio", "exponent", "dist", "sphere_deviation", "predictor"].map(String::from));
    let mut table = Table::with_header(header);
    for (c, d) in &rows {
        let mut row = coords(c, dim);
        row.extend([num(d.rho), num(d.a), num(d.ratio), num(d.exponent), num(d.dist), num(d.sphere_deviation), num(d.predictor)]);
        table.push(row);
    }
    rep.table(out, "doubling.csv", &table)?;
    rep.checks.push(Check::new("finite exponents", rows.iter().all(|x| x.1.exponent.is_finite()), format!("{} points", rows.len())));
    if is_homogeneous(cfg, domain) {
        let want = (dim + 2 * cfg.field.degree) as f64;
        let dev = rows.iter().filter(|x| x.0.norm() == 0.0).map(|x| (x.1.exponent - want).abs()).fold(0.0, f64::max);
        rep.checks.push(Check::new("homogeneous exponent", dev <= 1e-3, format!("max |exponent - {want}| = {dev:.3e}")));
    }
    if cfg.output.plot {
        let groups: Vec<(String, Vec<(f64, f64)>)> = cfg
            .sweep
            .a_factors
            .iter()
            .map(|a| (format!("a = {a}"), rows.iter().filter(|x| x.1.a == *a).map(|x| (x.1.rho, x.1.exponent)).collect()))
            .collect();
        rep.svg(out, "doubling.svg", &scatter(&groups, "rho", "exponent"))?;
    }
    Ok(())
}

fn derivative_check(cfg: &ExperimentConfig, domain: &GraphDomain, f: &dyn Field, centers: &[Vec3], out: &Path, rep: &mut RunReport) -> Run<()> {
    let dim = domain.dim();
    let rows: Vec<_> = grid(centers, &cfg.sweep.radii)
        .into_par_iter()
        .map(|(c, r)| -> Run<_> {
            let ctx = || format!("center {c:?}, r {r}");
            let t = derivative_terms(f, domain, &c, r, &cfg.quad).map_err(at("frequency", "derivative_terms", ctx))?;
            let fd = frequency_derivative_fd(f, domain, &c, r, cfg.freq.fd_step_rel, &cfg.quad).map_err(at("frequency", "frequency_derivative_fd", ctx))?;
            Ok((c, r, t, fd))
        })
        .collect::<Run<_>>()?;
    let mut header = coord_header("center", dim);
    header.extend(["r", "dist", "fd", "R_h", "R_b", "Err_r", "rim", "predicted", "literal", "rel_err"].map(String::from));
    let mut table = Table::with_header(header);
    let mut worst: f64 = 0.0;
    for (c, r, t, fd) in &rows {
        let rel = (fd - t.predicted()).abs() / fd.abs().max(1e-12);
        if fd.abs() > 1e-9 {
            worst = worst.max(rel);
        }
        let mut row = coords(c, dim);
        row.extend([num(*r), num(t.dist), num(*fd), num(t.r_h), num(t.r_b), num(t.err_r), num(t.rim), num(t.predicted()), num(t.literal()), num(rel)]);
        table.push(row);
    }
    rep.table(out, "derivative.csv", &table)?;
    rep.checks.push(Check::new("derivative identity", worst <= 1e-2, format!("max relative error {worst:.3e} where |dN/dr| > 1e-9")));
    if cfg.output.plot {
        let series = vec![
            ("finite difference".to_string(), rows.iter().map(|x| (x.1, x.3)).collect()),
            ("predicted".to_string(), rows.iter().map(|x| (x.1, x.2.predicted())).collect()),
        ];
        rep.svg(out, "derivative.svg", &line_plot(&series, "r", "dN_C/dr"))?;
    }
    Ok(())
}

fn straighten_verify(cfg: &ExperimentConfig, domain: &GraphDomain, f: &dyn Field, centers: &[Vec3], out: &Path, rep: &mut RunReport) -> Run<()> {
    let s = &cfg.straighten;
    let map = StraighteningMap::new(domain.clone(), s.moll_pts).map_err(at("straighten", "new", || format!("moll_pts {}", s.moll_pts)))?;
    let wb = working_radius(&map, 3.0 * domain.radius, s.ball_search_grid).map_err(at("straighten", "working_radius", || format!("grid {}", s.ball_search_grid)))?;
    let alpha = match domain.dini {
        DiniParameter::Holder { alpha, .. } => alpha,
        _ => 1.0,
    };
    let pairs = holder_pairs(domain.dim(), wb.radius / 4.0, 6);
    let cert = modulus_certificate(&map, alpha, &pairs).map_err(at("straighten", "modulus_certificate", || format!("alpha {alpha}")))?;
    let mut holder = Table::new(&["pair_dist", "holder_ratio"]);
    for (d, r) in &cert.samples {
        holder.push(vec![num(*d), num(*r)]);
    }
    rep.table(out, "holder.csv", &holder)?;
    rep.checks.push(Check::new("holder modulus finite", cert.constant.is_finite(), format!("alpha {alpha}: constant {:.4e} over {} pairs", cert.constant, cert.pairs)));
    let ext = ExtendedField::new(f, &map, wb.radius);
    let h0 = 0.1 * wb.radius;
    let (seq, lim, scale) = conormal_sequence(&ext, &Vec2::zeros(), h0).map_err(at("straighten", "conormal_sequence", || format!("h {h0}")))?;
    let mut conormal = Table::new(&["h", "conormal_jump"]);
    for c in &seq {
        conormal.push(vec![num(c.h), num(c.jump())]);
    }
    conormal.push(vec![num(0.0), num(lim)]);
    rep.table(out, "conormal.csv", &conormal)?;
    rep.checks.push(Check::new("co-normal jump", lim.abs() <= 1e-6 * scale.max(f64::MIN_POSITIVE), format!("Richardson limit {lim:.3e}, flux scale {scale:.3e}")));
    let rb = s.bump_radius * wb.radius;
    let spec = cfg.quad.with_tol(cfg.quad.tol.min(1e-9));
    let res: Vec<_> = centers
        .par_iter()
        .map(|c| weak_residual(&ext, c, rb, &spec).map(|w| (*c, w)).map_err(at("straighten", "weak_residual", || format!("center {c:?}, r {rb}"))))
        .collect::<Run<_>>()?;
    let dim = domain.dim();
    let mut header = coord_header("center", dim);
    header.extend(["r", "residual"].map(String::from));
    let mut weak = Table::with_header(header);
    for (c, w) in &res {
        let mut row = coords(c, dim);
        row.extend([num(rb), num(*w)]);
        weak.push(row);
    }
    rep.table(out, "weak_residual.csv", &weak)?;
    let worst = res.iter().map(|x| x.1.abs()).fold(0.0, f64::max);
    rep.checks.push(Check::new("weak residual", worst <= 1e-5, format!("{} bumps of radius {rb:.3e}, max {worst:.3e}", res.len())));
    if cfg.output.plot {
        let pts: Vec<(f64, f64)> = cert.samples.iter().map(|(d, r)| (d.log10(), *r)).collect();
        rep.svg(out, "holder.svg", &scatter(&[("ratio".into(), pts)], "log10 pair distance", "Holder ratio"))?;
    }
    Ok(())
}

fn critical_table(est: &CriticalSetEstimate, dim: usize) -> Table {
    let mut header = coord_header("", dim);
    header.extend(["grad_norm", "u_value", "class"].map(String::from));
    let mut t = Table::with_header(header);
    for p in &est.points {
        let mut row = coords(&p.point, dim);
        row.extend([num(p.grad_norm), num(p.value), p.class.as_str().to_string()]);
        t.push(row);
    }
    t
}

fn critical_pipeline(cfg: &ExperimentConfig, domain: &GraphDomain, f: &dyn Field, out: &Path, rep: &mut RunReport) -> Run<()> {
    let spec = PipelineSpec {
        moll_pts: cfg.straighten.moll_pts,
        working_grid: cfg.straighten.ball_search_grid,
        quad: cfg.quad,
        seed: cfg.seed,
        ..Default::default()
    };
    let r = theorem_pipeline(domain, f, &spec).map_err(at("critical", "theorem_pipeline", || format!("{:?}, R {}", domain.shape, domain.radius)))?;
    let dim = domain.dim();
    rep.table(out, "critical.csv", &critical_table(&r.critical, dim))?;
    let mut content = Table::new(&["r", "count", "count_r_pow"]);
    for s in &r.content {
        content.push(vec![num(s.r), s.count.to_string(), num(s.count_r_pow)]);
    }
    rep.table(out, "content.csv", &content)?;
    rep.checks.push(Check::new("admissible", r.admissibility.admissible, format!("theta(8R) {:.3e}", r.admissibility.theta_8r)));
    rep.checks.push(Check::new("frequency bound", r.lambda.is_finite(), format!("N(0, 5R) = {:.4}", r.lambda)));
    rep.checks.push(Check::new("doubling", r.doubling_ext.sup.is_finite(), format!("u {:.4e}, extension {:.4e}", r.doubling_u, r.doubling_ext.sup)));
    rep.checks.push(Check::new("pull-back", r.pullback <= 1e-8, format!("{} points, max relative |grad u| {:.2e}", r.critical.points.len(), r.pullback)));
    if cfg.output.plot {
        let pts: Vec<(f64, f64)> = r.critical.points.iter().map(|p| (p.point.x, p.point[VERT])).collect();
        rep.svg(out, "critical.svg", &scatter(&[("critical points".into(), pts)], "x", "s"))?;
    }
    Ok(())
}

fn conformal_count(cfg: &ExperimentConfig, domain: &GraphDomain, f: &dyn Field, out: &Path, rep: &mut RunReport) -> Run<()> {
    let big_r = domain.radius;
    let map = build_map(domain, big_r, &MapSpec::default()).map_err(at("conformal2d", "build_map", || format!("{:?}, R {big_r}", domain.shape)))?;
    let spacing = 0.1 * big_r;
    let t = transfer_count(&map, f, big_r, spacing, &CriticalSpec::default())
        .map_err(at("conformal2d", "transfer_count", || format!("rho {big_r}, spacing {spacing}")))?;
    let (direct, mapped) = t.counts();
    let mut table = Table::new(&["N_freq", "count", "hopf_c"]);
    table.push(vec![num(t.n_freq), direct.to_string(), num(t.hopf)]);
    rep.table(out, "conformal.csv", &table)?;
    rep.checks.push(Check::new("count transfer", direct == mapped, format!("direct {direct}, mapped {mapped}, N_freq {:.4}", t.n_freq)));
    rep.checks.push(Check::new("hopf bound", t.min_det >= 0.5 * t.hopf, format!("min |det DPhi| {:.3e}, c {:.3e}", t.min_det, t.hopf)));
    if cfg.output.plot {
        let before: Vec<(f64, f64)> = t.before.points.iter().map(|p| (p.point.x, p.point[VERT])).collect();
        let after: Vec<(f64, f64)> = t.after.iter().map(|(_, z)| (z.x, z[VERT])).collect();
        rep.svg(out, "conformal.svg", &scatter(&[("direct".into(), before), ("mapped preimages".into(), after)], "x", "y"))?;
    }
    Ok(())
}

fn spvar_fit(cfg: &ExperimentConfig, domain: &GraphDomain, f: &dyn Field, centers: &[Vec3], out: &Path, rep: &mut RunReport) -> Run<()> {
    let dim = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = |rng: &mut ChaCha8Rng| {
        let mut v = Vec3::new(rng.gen_range(-1.0..1.0), if dim == 3 { rng.gen_range(-1.0..1.0) } else { 0.0 }, rng.gen_range(-1.0..1.0));
        v /= v.norm().max(1e-12);
        v
    };
    let mut pts = Vec::new();
    for i in 0..cfg.sweep.samples {
        let r = cfg.sweep.radii[i % cfg.sweep.radii.len()];
        let c = centers[i % centers.len()];
        let x1 = c + rng.gen_range(0.0..r) * unit(&mut rng);
        let x2 = x1 + rng.gen_range(0.0..0.5) * r * unit(&mut rng);
        if domain.level(&x1) > 1.5 * r && domain.level(&x2) > 1.5 * r {
            pts.push((x1, x2, r));
        }
    }
    let rows: Vec<_> = pts
        .into_par_iter()
        .map(|(a, b, r)| spatial_variation_check(f, domain, &a, &b, r, &cfg.quad).map(|s| (a, b, r, s)).map_err(at("frequency", "spatial_variation_check", || format!("X1 {a:?}, X2 {b:?}, r {r}"))))
        .collect::<Run<_>>()?;
    let mut header = coord_header("x1", dim);
    header.extend(coord_header("x2", dim));
    header.extend(["r", "lhs", "rhs_core", "ratio"].map(String::from));
    let mut table = Table::with_header(header);
    let mut c_fit: f64 = 0.0;
    for (a, b, r, s) in &rows {
        let ratio = if s.rhs_core > 0.0 { s.lhs / s.rhs_core } else { f64::NAN };
        if ratio.is_finite() {
            c_fit = c_fit.max(ratio);
        }
        let mut row = coords(a, dim);
        row.extend(coords(b, dim));
        row.extend([num(*r), num(s.lhs), num(s.rhs_core), num(ratio)]);
        table.push(row);
    }
    rep.table(out, "spvar.csv", &table)?;
    let zero_ok = rows.iter().all(|x| x.3.rhs_core > 0.0 || x.3.lhs <= 1e-8);
    rep.checks.push(Check::new("fitted constant", c_fit.is_finite() && zero_ok && !rows.is_empty(), format!("{} pairs, C = {c_fit:.4e}", rows.len())));
    if cfg.output.plot {
        let pts: Vec<(f64, f64)> = rows.iter().map(|x| (x.3.rhs_core, x.3.lhs)).collect();
        rep.svg(out, "spvar.svg", &scatter(&[("pairs".into(), pts)], "W^1/2(X1) + W^1/2(X2)", "|N(X1) - N(X2)|"))?;
    }
    Ok(())
}

fn simon(cfg: &ExperimentConfig, out: &Path, rep: &mut RunReport) -> Run<()> {
    let eps = cfg.field.epsilon;
    let z = cfg.sweep.extent;
    let fx = simon_fixture(eps, z).map_err(at("harmonic", "simon_fixture", || format!("epsilon {eps}, extent {z}")))?;
    let region = SearchRegion::boxed(3, point3(-1.0, -1.0, -z), point3(1.0, 1.0, z));
    let est = find_critical_points(&fx.field, &region, 0.25, &CriticalSpec::default()).map_err(at("critical", "find_critical_points", || format!("box |x|,|y| <= 1, |z| <= {z}")))?;
    rep.table(out, "critical.csv", &critical_table(&est, 3))?;
    let mut err: f64 = 0.0;
    let mut classes = est.points.len() == fx.critical.len();
    for (found, want) in est.points.iter().zip(&fx.critical) {
        err = err.max((found.point - want.point).norm());
        classes &= (found.class == crate::critical::PointClass::Singular) == want.singular;
    }
    rep.checks.push(Check::new(
        "predicted points",
        est.points.len() == fx.critical.len() && err <= 1e-8,
        format!("{} found, {} predicted, max error {err:.2e}", est.points.len(), fx.critical.len()),
    ));
    rep.checks.push(Check::new("classes", classes, format!("{} singular", est.singular().count())));
    if cfg.output.plot {
        let sing: Vec<(f64, f64)> = est.singular().map(|p| (p.point.z, 0.0)).collect();
        let crit: Vec<(f64, f64)> = est.points.iter().filter(|p| p.class != crate::critical::PointClass::Singular).map(|p| (p.point.z, 0.0)).collect();
        rep.svg(out, "simon.svg", &scatter(&[("singular".into(), sing), ("critical only".into(), crit)], "z", ""))?;
    }
    Ok(())
}
